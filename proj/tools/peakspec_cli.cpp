// Command-line front end: spectral computations for Robin Laplacians on
// non-isotropic peak domains.
//
//   peakspec interval --L 1 --r 0 --j 2        exact interval Robin eigenvalue
//   peakspec model1d  --c2 1 --j-max 5          1D model-operator spectrum
//   peakspec peak     --alpha 16                one-alpha peak solve (3 forms)
//   peakspec sweep    --config run.json         alpha sweep -> csv/json/svg
//   peakspec fit      --config run.json         power-law fits on a finished sweep
//   peakspec report   --config run.json         checks + human-readable summary
//
// Every subcommand also accepts --config; flags override the file.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "peakspec/runio.hpp"

namespace {

nlohmann::ordered_json load_config_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    // strict parse (duplicate keys etc.) happens in parse_config
    peakspec::runio::parse_config(buffer.str());
    return nlohmann::ordered_json::parse(buffer.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral toolkit for Robin Laplacians on non-isotropic peaks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::optional<double> L, r, alpha, p, q, a, c1, c2, b;
    std::optional<int> j, j_max, cells, n1, n2, ns;
    std::optional<std::uint64_t> seed;
    std::string domain;
    std::vector<double> alphas;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON configuration file");
        cmd->add_option("--output-dir", output_dir, "artifact directory");
        cmd->add_option("--seed", seed, "seed for randomized form samples");
    };

    auto* cmd_interval = app.add_subcommand("interval", "interval Robin eigenvalue");
    add_common(cmd_interval);
    cmd_interval->add_option("--L", L, "interval half-length");
    cmd_interval->add_option("--r", r, "Robin parameter");
    cmd_interval->add_option("--j", j, "eigenvalue index (1-based)");

    auto* cmd_model = app.add_subcommand("model1d", "1D model-operator eigenvalues");
    add_common(cmd_model);
    cmd_model->add_option("--c1", c1, "coefficient of -1/s^p");
    cmd_model->add_option("--c2", c2, "coefficient of -1/s^q");
    cmd_model->add_option("--p", p, "lower exponent");
    cmd_model->add_option("--q", q, "upper exponent");
    cmd_model->add_option("--domain", domain, "full|inner|outer");
    cmd_model->add_option("--b", b, "truncation point for inner/outer");
    cmd_model->add_option("--j-max", j_max, "number of eigenvalues");
    cmd_model->add_option("--cells", cells, "grid cells");

    auto* cmd_peak = app.add_subcommand("peak", "single-alpha peak solve");
    add_common(cmd_peak);
    cmd_peak->add_option("--alpha", alpha, "coupling");
    cmd_peak->add_option("--p", p, "lower exponent");
    cmd_peak->add_option("--q", q, "upper exponent");
    cmd_peak->add_option("--a", a, "truncation height");
    cmd_peak->add_option("--j-max", j_max, "number of eigenvalues");
    cmd_peak->add_option("--n1", n1, "t1 cells");
    cmd_peak->add_option("--n2", n2, "t2 cells");
    cmd_peak->add_option("--ns", ns, "s cells");

    auto* cmd_sweep = app.add_subcommand("sweep", "alpha sweep with bracket records");
    add_common(cmd_sweep);
    cmd_sweep->add_option("--alphas", alphas, "ascending alpha list");
    cmd_sweep->add_option("--p", p, "lower exponent");
    cmd_sweep->add_option("--q", q, "upper exponent");
    cmd_sweep->add_option("--a", a, "truncation height");
    cmd_sweep->add_option("--j-max", j_max, "eigenvalues per alpha");
    cmd_sweep->add_option("--n1", n1, "t1 cells");
    cmd_sweep->add_option("--n2", n2, "t2 cells");
    cmd_sweep->add_option("--ns", ns, "s cells");

    auto* cmd_fit = app.add_subcommand("fit", "power-law fits on sweep results");
    add_common(cmd_fit);

    auto* cmd_report = app.add_subcommand("report", "checks and summary for sweep results");
    add_common(cmd_report);

    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::ordered_json doc =
            config_path.empty() ? nlohmann::ordered_json::object() : load_config_document(config_path);

        if (cmd_interval->parsed()) doc["command"] = "interval";
        if (cmd_model->parsed()) doc["command"] = "model1d";
        if (cmd_peak->parsed()) doc["command"] = "peak";
        if (cmd_sweep->parsed()) doc["command"] = "sweep";
        if (cmd_fit->parsed()) doc["command"] = "fit";
        if (cmd_report->parsed()) doc["command"] = "report";

        if (!output_dir.empty()) doc["output_dir"] = output_dir;
        // interval/model1d/peak are print-only unless a directory is requested
        if (!doc.contains("output_dir") &&
            (cmd_interval->parsed() || cmd_model->parsed() || cmd_peak->parsed()))
            doc["output_dir"] = "";
        if (seed) doc["seed"] = *seed;

        if (L) doc["interval"]["L"] = *L;
        if (r) doc["interval"]["r"] = *r;
        if (j) doc["interval"]["j"] = *j;

        if (cmd_model->parsed()) {
            if (c1) doc["model1d"]["c1"] = *c1;
            if (c2) doc["model1d"]["c2"] = *c2;
            if (p) doc["model1d"]["p"] = *p;
            if (q) doc["model1d"]["q"] = *q;
            if (!domain.empty()) doc["model1d"]["domain"] = domain;
            if (b) doc["model1d"]["b"] = *b;
            if (j_max) doc["model1d"]["j_max"] = *j_max;
            if (cells) doc["model1d"]["cells"] = *cells;
        } else {
            if (p) doc["peak"]["p"] = *p;
            if (q) doc["peak"]["q"] = *q;
            if (a) doc["peak"]["a"] = *a;
            if (alpha) doc["peak"]["alpha"] = *alpha;
            if (!alphas.empty()) doc["sweep"]["alphas"] = alphas;
            if (j_max) doc["sweep"]["j_max"] = *j_max;
            if (n1) doc["grid"]["n1"] = *n1;
            if (n2) doc["grid"]["n2"] = *n2;
            if (ns) doc["grid"]["ns"] = *ns;
        }

        const peakspec::runio::RunConfig config =
            peakspec::runio::parse_config(doc.dump());
        return peakspec::runio::run(config);
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "configuration error: %s\n", err.what());
        return 1;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    }
}
