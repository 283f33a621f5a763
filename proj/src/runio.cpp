#include "peakspec/runio.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "peakspec/eigensolve.hpp"
#include "peakspec/grid1d.hpp"
#include "peakspec/metric3d.hpp"
#include "peakspec/secular.hpp"

namespace peakspec::runio {

using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument(message); }

void require(bool ok, const std::string& message) {
    if (!ok) fail(message);
}

// ---- strict config ingestion ------------------------------------------------

void check_keys(const ordered_json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            fail("unknown key '" + item.key() + "' in section '" + section + "'");
}

double get_number(const ordered_json& obj, const std::string& section, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(section + "." + key + ": expected a number");
    return v.get<double>();
}

int get_int(const ordered_json& obj, const std::string& section, const std::string& key,
            int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(section + "." + key + ": expected an integer");
    return v.get<int>();
}

Command parse_command(const std::string& name) {
    if (name == "interval") return Command::interval;
    if (name == "model1d") return Command::model1d;
    if (name == "peak") return Command::peak;
    if (name == "sweep") return Command::sweep;
    if (name == "fit") return Command::fit;
    if (name == "report") return Command::report;
    fail("command: expected one of interval|model1d|peak|sweep|fit|report, got '" + name + "'");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::interval: return "interval";
        case Command::model1d: return "model1d";
        case Command::peak: return "peak";
        case Command::sweep: return "sweep";
        case Command::fit: return "fit";
        case Command::report: return "report";
    }
    return {};
}

}  // namespace

RunConfig parse_config_json(const ordered_json& doc) {
    if (!doc.is_object()) fail("config: top-level document must be an object");
    check_keys(doc, "top level",
               {"command", "output_dir", "seed", "peak", "sweep", "grid", "solver", "fit",
                "interval", "model1d"});
    require(doc.contains("command"), "config: missing required key 'command'");
    require(doc.at("command").is_string(), "command: expected a string");

    RunConfig config;
    config.command = parse_command(doc.at("command").get<std::string>());
    if (doc.contains("output_dir")) {
        require(doc.at("output_dir").is_string(), "output_dir: expected a string");
        config.output_dir = doc.at("output_dir").get<std::string>();
    }
    if (doc.contains("seed")) {
        require(doc.at("seed").is_number_integer() && doc.at("seed").get<std::int64_t>() >= 0,
                "seed: expected a nonnegative integer");
        config.seed = doc.at("seed").get<std::uint64_t>();
        config.sweep.seed = config.seed;
    }

    if (doc.contains("peak")) {
        const auto& peak = doc.at("peak");
        check_keys(peak, "peak", {"p", "q", "a", "alpha", "c_bracket"});
        config.sweep.p = get_number(peak, "peak", "p", config.sweep.p);
        config.sweep.q = get_number(peak, "peak", "q", config.sweep.q);
        config.sweep.a = get_number(peak, "peak", "a", config.sweep.a);
        config.peak_alpha = get_number(peak, "peak", "alpha", config.peak_alpha);
        if (peak.contains("c_bracket"))
            config.sweep.c_bracket = get_number(peak, "peak", "c_bracket", 0.0);
    }
    require(1.0 < config.sweep.p && config.sweep.p < config.sweep.q && config.sweep.q < 2.0,
            "peak: exponents must satisfy 1 < p < q < 2");
    require(0.0 < config.sweep.a && config.sweep.a < 1.0, "peak.a: must lie in (0, 1)");
    require(config.peak_alpha >= 1.0, "peak.alpha: must be >= 1");
    if (config.sweep.c_bracket)
        require(*config.sweep.c_bracket > 0.0, "peak.c_bracket: must be positive");

    if (doc.contains("sweep")) {
        const auto& sw = doc.at("sweep");
        check_keys(sw, "sweep", {"alphas", "j_max", "alpha_threshold", "form_samples"});
        if (sw.contains("alphas")) {
            require(sw.at("alphas").is_array() && !sw.at("alphas").empty(),
                    "sweep.alphas: expected a nonempty array of numbers");
            config.sweep.alphas.clear();
            for (const auto& v : sw.at("alphas")) {
                require(v.is_number(), "sweep.alphas: expected numbers");
                config.sweep.alphas.push_back(v.get<double>());
            }
        }
        config.sweep.j_max = get_int(sw, "sweep", "j_max", config.sweep.j_max);
        config.sweep.alpha_threshold =
            get_number(sw, "sweep", "alpha_threshold", config.sweep.alpha_threshold);
        config.sweep.form_samples = get_int(sw, "sweep", "form_samples", config.sweep.form_samples);
    }
    for (std::size_t i = 0; i + 1 < config.sweep.alphas.size(); ++i)
        require(config.sweep.alphas[i] < config.sweep.alphas[i + 1],
                "sweep.alphas: must be strictly ascending");
    require(config.sweep.alphas.front() >= 1.0, "sweep.alphas: entries must be >= 1");
    require(config.sweep.j_max >= 1 && config.sweep.j_max <= 12,
            "sweep.j_max: must lie in [1, 12]");
    require(config.sweep.form_samples >= 0 && config.sweep.form_samples <= 10000,
            "sweep.form_samples: must lie in [0, 10000]");

    if (doc.contains("grid")) {
        const auto& grid = doc.at("grid");
        check_keys(grid, "grid", {"n1", "n2", "ns", "s_ratio", "s_min_factor"});
        config.sweep.grid.n1 = get_int(grid, "grid", "n1", config.sweep.grid.n1);
        config.sweep.grid.n2 = get_int(grid, "grid", "n2", config.sweep.grid.n2);
        config.sweep.grid.ns = get_int(grid, "grid", "ns", config.sweep.grid.ns);
        config.sweep.grid.s_ratio = get_number(grid, "grid", "s_ratio", config.sweep.grid.s_ratio);
        config.sweep.grid.s_min_factor =
            get_number(grid, "grid", "s_min_factor", config.sweep.grid.s_min_factor);
    }
    require(config.sweep.grid.n1 >= 8 && config.sweep.grid.n2 >= 8,
            "grid.n1/grid.n2: must be >= 8");
    require(config.sweep.grid.ns >= 32, "grid.ns: must be >= 32");
    require(config.sweep.grid.s_ratio > 1.0 && config.sweep.grid.s_ratio <= 1.5,
            "grid.s_ratio: must lie in (1, 1.5]");
    require(config.sweep.grid.s_min_factor > 0.0 && config.sweep.grid.s_min_factor <= 0.1,
            "grid.s_min_factor: must lie in (0, 0.1]");

    if (doc.contains("solver")) {
        const auto& solver = doc.at("solver");
        check_keys(solver, "solver", {"tol_scale", "block_size", "max_iterations"});
        config.sweep.solver.tol_scale =
            get_number(solver, "solver", "tol_scale", config.sweep.solver.tol_scale);
        config.sweep.solver.block_size =
            get_int(solver, "solver", "block_size", config.sweep.solver.block_size);
        config.sweep.solver.max_iterations =
            get_int(solver, "solver", "max_iterations", config.sweep.solver.max_iterations);
    }
    require(config.sweep.solver.tol_scale > 0.0 && config.sweep.solver.tol_scale <= 1e-3,
            "solver.tol_scale: must lie in (0, 1e-3]");
    require(config.sweep.solver.block_size >= 0, "solver.block_size: must be >= 0");
    require(config.sweep.solver.max_iterations >= 10,
            "solver.max_iterations: must be >= 10");

    if (doc.contains("fit")) {
        const auto& fit = doc.at("fit");
        check_keys(fit, "fit", {"window_fraction"});
        config.fit_window_fraction =
            get_number(fit, "fit", "window_fraction", config.fit_window_fraction);
    }
    require(config.fit_window_fraction > 0.0 && config.fit_window_fraction <= 1.0,
            "fit.window_fraction: must lie in (0, 1]");

    if (doc.contains("interval")) {
        const auto& iv = doc.at("interval");
        check_keys(iv, "interval", {"L", "r", "j"});
        config.interval.half_length = get_number(iv, "interval", "L", config.interval.half_length);
        config.interval.robin = get_number(iv, "interval", "r", config.interval.robin);
        config.interval.j = get_int(iv, "interval", "j", config.interval.j);
    }
    require(config.interval.half_length > 0.0, "interval.L: must be positive");
    require(config.interval.j >= 1 && config.interval.j <= secular::kDefaultIndexWindow,
            "interval.j: must lie in [1, 12]");

    if (doc.contains("model1d")) {
        const auto& md = doc.at("model1d");
        check_keys(md, "model1d", {"c1", "c2", "p", "q", "domain", "b", "j_max", "cells"});
        config.model1d.c1 = get_number(md, "model1d", "c1", config.model1d.c1);
        config.model1d.c2 = get_number(md, "model1d", "c2", config.model1d.c2);
        config.model1d.p = get_number(md, "model1d", "p", config.model1d.p);
        config.model1d.q = get_number(md, "model1d", "q", config.model1d.q);
        if (md.contains("domain")) {
            require(md.at("domain").is_string(), "model1d.domain: expected a string");
            config.model1d.domain = md.at("domain").get<std::string>();
        }
        config.model1d.b = get_number(md, "model1d", "b", config.model1d.b);
        config.model1d.j_max = get_int(md, "model1d", "j_max", config.model1d.j_max);
        config.model1d.cells = get_int(md, "model1d", "cells", config.model1d.cells);
    }
    require(config.model1d.c1 >= 0.0 && config.model1d.c2 >= 0.0,
            "model1d.c1/c2: must be nonnegative");
    require(1.0 < config.model1d.p && config.model1d.p < config.model1d.q &&
                config.model1d.q < 2.0,
            "model1d: exponents must satisfy 1 < p < q < 2");
    require(config.model1d.domain == "full" || config.model1d.domain == "inner" ||
                config.model1d.domain == "outer",
            "model1d.domain: expected full|inner|outer");
    require(config.model1d.b > 0.0, "model1d.b: must be positive");
    require(config.model1d.j_max >= 1 && config.model1d.j_max <= 12,
            "model1d.j_max: must lie in [1, 12]");
    require(config.model1d.cells >= 16 && config.model1d.cells <= 200000,
            "model1d.cells: must lie in [16, 200000]");
    return config;
}

RunConfig parse_config(const std::string& text) {
    // duplicate-key detection through the SAX-level parse callback
    std::vector<std::set<std::string>> key_stack;
    nlohmann::json::parser_callback_t cb = [&](int, nlohmann::json::parse_event_t event,
                                               nlohmann::json& parsed) {
        using event_t = nlohmann::json::parse_event_t;
        if (event == event_t::object_start) {
            key_stack.emplace_back();
        } else if (event == event_t::object_end) {
            key_stack.pop_back();
        } else if (event == event_t::key) {
            const auto key = parsed.get<std::string>();
            if (!key_stack.back().insert(key).second)
                throw std::invalid_argument("config: duplicate key '" + key + "'");
        }
        return true;
    };
    nlohmann::json probe;
    try {
        probe = nlohmann::json::parse(text, cb);
    } catch (const nlohmann::json::parse_error& err) {
        fail(std::string("config: malformed document: ") + err.what());
    }
    return parse_config_json(ordered_json::parse(text));
}

nlohmann::ordered_json RunConfig::resolved() const {
    ordered_json doc;
    doc["command"] = command_name(command);
    doc["output_dir"] = output_dir;
    doc["seed"] = seed;
    doc["peak"] = {{"p", sweep.p},
                   {"q", sweep.q},
                   {"a", sweep.a},
                   {"alpha", peak_alpha},
                   {"c_bracket", sweep.c_bracket
                                     ? *sweep.c_bracket
                                     : metric3d::bracket_constant(sweep.p, sweep.q)}};
    doc["sweep"] = {{"alphas", sweep.alphas},
                    {"j_max", sweep.j_max},
                    {"alpha_threshold", sweep.alpha_threshold},
                    {"form_samples", sweep.form_samples}};
    doc["grid"] = {{"n1", sweep.grid.n1},
                   {"n2", sweep.grid.n2},
                   {"ns", sweep.grid.ns},
                   {"s_ratio", sweep.grid.s_ratio},
                   {"s_min_factor", sweep.grid.s_min_factor}};
    doc["solver"] = {{"tol_scale", sweep.solver.tol_scale},
                     {"block_size", sweep.solver.block_size},
                     {"max_iterations", sweep.solver.max_iterations}};
    doc["fit"] = {{"window_fraction", fit_window_fraction}};
    doc["interval"] = {{"L", interval.half_length}, {"r", interval.robin}, {"j", interval.j}};
    doc["model1d"] = {{"c1", model1d.c1},       {"c2", model1d.c2}, {"p", model1d.p},
                      {"q", model1d.q},         {"domain", model1d.domain},
                      {"b", model1d.b},         {"j_max", model1d.j_max},
                      {"cells", model1d.cells}};
    return doc;
}

// ---- artifact serialization --------------------------------------------------

std::string results_csv(const std::vector<asympt::SweepRecord>& records) {
    std::string out =
        "alpha,j,e_exact,e_minus,e_plus,e_model1d_pred,ratio,n1,n2,ns,s_min,residual_max,"
        "converged\n";
    for (const auto& rec : records) {
        out += fmt(rec.alpha) + "," + std::to_string(rec.j) + "," + fmt(rec.e_exact) + "," +
               fmt(rec.e_minus) + "," + fmt(rec.e_plus) + "," + fmt(rec.e_model1d) + "," +
               fmt(rec.ratio) + "," + std::to_string(rec.n1) + "," + std::to_string(rec.n2) +
               "," + std::to_string(rec.ns) + "," + fmt(rec.s_min) + "," +
               fmt(rec.residual_max) + "," + (rec.converged ? "true" : "false") + "\n";
    }
    return out;
}

namespace {

ordered_json record_json(const asympt::SweepRecord& rec) {
    ordered_json j;
    j["alpha"] = rec.alpha;
    j["j"] = rec.j;
    j["e_exact"] = rec.e_exact;
    j["e_minus"] = rec.e_minus;
    j["e_plus"] = rec.e_plus;
    j["e_model1d_pred"] = rec.e_model1d;
    j["ratio"] = rec.ratio;
    j["n1"] = rec.n1;
    j["n2"] = rec.n2;
    j["ns"] = rec.ns;
    j["s_min"] = rec.s_min;
    j["residual_max"] = rec.residual_max;
    j["converged"] = rec.converged;
    j["sandwich_ok"] = rec.sandwich_ok;
    j["form_sandwich_ok"] = rec.form_sandwich_ok;
    j["below_threshold"] = rec.below_threshold;
    j["minus_semibounded"] = rec.minus_semibounded;
    j["note"] = rec.note;
    return j;
}

ordered_json fit_json(const asympt::PowerLawFit& fit) {
    ordered_json j;
    j["valid"] = fit.valid;
    j["exponent"] = fit.exponent;
    j["coefficient"] = fit.coefficient;
    j["r_squared"] = fit.r_squared;
    j["window_lo"] = fit.window_lo;
    j["window_hi"] = fit.window_hi;
    j["points"] = fit.points;
    j["note"] = fit.note;
    return j;
}

}  // namespace

ordered_json results_document(const RunConfig& config, const asympt::SweepResult& result) {
    ordered_json doc;
    doc["schema"] = "peakspec-results-v1";
    doc["config"] = config.resolved();
    doc["reference"] = {{"model_eigenvalues", result.model_reference},
                        {"richardson_disagreement", result.reference_disagreement},
                        {"target_exponent", result.target_exponent}};
    doc["sandwich_threshold"] = {{"found", result.sandwich_threshold_found},
                                 {"alpha", result.sandwich_threshold}};
    doc["records"] = ordered_json::array();
    for (const auto& rec : result.records) doc["records"].push_back(record_json(rec));
    return doc;
}

std::string eigenvalue_plot_svg(const std::vector<asympt::SweepRecord>& records,
                                double target_exponent) {
    struct Point {
        double x, y;
        int j;
    };
    std::vector<Point> points;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    int j_max = 0;
    for (const auto& rec : records) {
        if (!rec.converged || rec.e_exact == 0.0) continue;
        const Point pt{std::log10(rec.alpha), std::log10(std::abs(rec.e_exact)), rec.j};
        points.push_back(pt);
        xmin = std::min(xmin, pt.x);
        xmax = std::max(xmax, pt.x);
        ymin = std::min(ymin, pt.y);
        ymax = std::max(ymax, pt.y);
        j_max = std::max(j_max, rec.j);
    }
    const double w = 720, h = 540, ml = 70, mr = 30, mt = 40, mb = 60;
    if (points.empty()) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-9) xmax = xmin + 1;
    if (ymax - ymin < 1e-9) ymax = ymin + 1;
    const double padx = 0.05 * (xmax - xmin), pady = 0.08 * (ymax - ymin);
    xmin -= padx;
    xmax += padx;
    ymin -= pady;
    ymax += pady;
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto Y = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    char buf[256];
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"540\" "
           "viewBox=\"0 0 720 540\">\n";
    svg += "<rect width=\"720\" height=\"540\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                  ml, h - mb, w - mr, h - mb);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                  ml, mt, ml, h - mb);
    svg += buf;
    // integer-decade ticks
    for (int t = static_cast<int>(std::ceil(xmin)); t <= static_cast<int>(std::floor(xmax)); ++t) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>"
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" text-anchor=\"middle\">1e%d"
                      "</text>\n",
                      X(t), h - mb, X(t), h - mb + 6, X(t), h - mb + 20, t);
        svg += buf;
    }
    for (int t = static_cast<int>(std::ceil(ymin)); t <= static_cast<int>(std::floor(ymax)); ++t) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>"
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" text-anchor=\"end\">1e%d"
                      "</text>\n",
                      ml - 6, Y(t), ml, Y(t), ml - 10, Y(t) + 4, t);
        svg += buf;
    }
    svg += "<text x=\"360\" y=\"525\" font-size=\"14\" text-anchor=\"middle\">log10 alpha"
           "</text>\n";
    svg += "<text x=\"18\" y=\"270\" font-size=\"14\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 270)\">log10 |E_j|</text>\n";
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (int j = 1; j <= j_max; ++j) {
        std::string poly;
        for (const auto& pt : points)
            if (pt.j == j) {
                std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", X(pt.x), Y(pt.y));
                poly += buf;
            }
        if (poly.empty()) continue;
        std::snprintf(buf, sizeof(buf),
                      "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
                      poly.c_str(), palette[(j - 1) % 6]);
        svg += buf;
        for (const auto& pt : points)
            if (pt.j == j) {
                std::snprintf(buf, sizeof(buf),
                              "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", X(pt.x),
                              Y(pt.y), palette[(j - 1) % 6]);
                svg += buf;
            }
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" fill=\"%s\">j=%d</text>\n",
                      w - mr - 40.0, mt + 16.0 * j, palette[(j - 1) % 6], j);
        svg += buf;
    }
    // reference slope line anchored at the last j=1 point
    for (auto it = points.rbegin(); it != points.rend(); ++it)
        if (it->j == 1) {
            const double x0 = xmin + padx, x1 = xmax - padx;
            const double y0 = it->y + target_exponent * (x0 - it->x);
            const double y1 = it->y + target_exponent * (x1 - it->x);
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" "
                          "stroke-dasharray=\"6 4\"/>\n<text x=\"%.2f\" y=\"%.2f\" "
                          "font-size=\"12\" fill=\"gray\">slope %.3f</text>\n",
                          X(x0), Y(y0), X(x1), Y(y1), X(x0) + 8.0, Y(y0) - 8.0, target_exponent);
            svg += buf;
            break;
        }
    svg += "</svg>\n";
    return svg;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

// ---- command execution --------------------------------------------------------

namespace {

void write_provenance(const RunConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    atomic_write(std::filesystem::path(config.output_dir) / "config.resolved.json",
                 config.resolved().dump(2) + "\n");
}

ordered_json load_results(const RunConfig& config) {
    const auto path = std::filesystem::path(config.output_dir) / "results.json";
    std::ifstream in(path);
    if (!in) fail("results.json not found in '" + config.output_dir + "' (run sweep first)");
    ordered_json doc;
    in >> doc;
    return doc;
}

std::vector<asympt::SweepRecord> records_from_json(const ordered_json& doc) {
    std::vector<asympt::SweepRecord> records;
    for (const auto& j : doc.at("records")) {
        asympt::SweepRecord rec;
        rec.alpha = j.at("alpha").get<double>();
        rec.j = j.at("j").get<int>();
        rec.e_exact = j.at("e_exact").get<double>();
        rec.e_minus = j.at("e_minus").get<double>();
        rec.e_plus = j.at("e_plus").get<double>();
        rec.e_model1d = j.at("e_model1d_pred").get<double>();
        rec.ratio = j.at("ratio").get<double>();
        rec.n1 = j.at("n1").get<int>();
        rec.n2 = j.at("n2").get<int>();
        rec.ns = j.at("ns").get<int>();
        rec.s_min = j.at("s_min").get<double>();
        rec.residual_max = j.at("residual_max").get<double>();
        rec.converged = j.at("converged").get<bool>();
        rec.sandwich_ok = j.at("sandwich_ok").get<bool>();
        rec.form_sandwich_ok = j.at("form_sandwich_ok").get<bool>();
        rec.below_threshold = j.at("below_threshold").get<bool>();
        rec.minus_semibounded = j.at("minus_semibounded").get<bool>();
        rec.note = j.at("note").get<std::string>();
        records.push_back(rec);
    }
    return records;
}

int run_interval(const RunConfig& config) {
    const double value = secular::interval_eigenvalue(
        {config.interval.half_length, config.interval.robin}, config.interval.j);
    std::printf("%.17g\n", value);
    if (!config.output_dir.empty()) {
        write_provenance(config);
        ordered_json doc;
        doc["L"] = config.interval.half_length;
        doc["r"] = config.interval.robin;
        doc["j"] = config.interval.j;
        doc["eigenvalue"] = value;
        atomic_write(std::filesystem::path(config.output_dir) / "interval.json",
                     doc.dump(2) + "\n");
    }
    return 0;
}

int run_model1d(const RunConfig& config) {
    const grid1d::ModelPotentialSpec spec{config.model1d.c1, config.model1d.c2, config.model1d.p,
                                          config.model1d.q};
    grid1d::Domain domain = grid1d::Domain::full();
    std::vector<double> required;
    if (config.model1d.domain == "inner") {
        domain = grid1d::Domain::inner(config.model1d.b);
        required.push_back(config.model1d.b);
    } else if (config.model1d.domain == "outer") {
        domain = grid1d::Domain::outer(config.model1d.b);
        required.push_back(config.model1d.b);
    }
    const grid1d::Grid1D grid = grid1d::default_model_grid(spec, config.model1d.cells, required);
    const auto values = grid1d::model_eigenvalues(spec, grid, domain, config.model1d.j_max);
    for (std::size_t i = 0; i < values.size(); ++i)
        std::printf("E_%zu = %.17g\n", i + 1, values[i]);
    if (!config.output_dir.empty()) {
        write_provenance(config);
        ordered_json doc;
        doc["eigenvalues"] = values;
        doc["domain"] = config.model1d.domain;
        atomic_write(std::filesystem::path(config.output_dir) / "model1d.json",
                     doc.dump(2) + "\n");
    }
    return 0;
}

int run_peak_or_sweep(const RunConfig& config) {
    asympt::SweepConfig sweep_config = config.sweep;
    if (config.command == Command::peak) sweep_config.alphas = {config.peak_alpha};
    const asympt::SweepResult result = asympt::sweep(sweep_config);

    bool converged = true;
    bool checks = true;
    for (const auto& rec : result.records) {
        converged = converged && rec.converged && rec.note.empty();
        if (!rec.below_threshold)
            checks = checks && rec.sandwich_ok && rec.form_sandwich_ok;
    }

    for (const auto& rec : result.records) {
        const std::string note = rec.note.empty() ? "" : "  [" + rec.note + "]";
        std::printf("alpha=%-8g j=%d  e_exact=%.10g  e_minus=%.10g  e_plus=%.10g  ratio=%.8g%s\n",
                    rec.alpha, rec.j, rec.e_exact, rec.e_minus, rec.e_plus, rec.ratio,
                    note.c_str());
    }

    if (!config.output_dir.empty()) {
        write_provenance(config);
        ordered_json doc = results_document(config, result);
        const auto a1 = result.model_reference.empty() ? 0.0 : result.model_reference[0];
        const auto semibound = asympt::semibound_check(
            result.records, a1, config.sweep.alpha_threshold, result.target_exponent);
        doc["reports"]["semibound"] = {{"passed", semibound.passed},
                                       {"bound_constant", semibound.bound_constant},
                                       {"checked", semibound.checked},
                                       {"skipped", semibound.skipped},
                                       {"violating_alphas", semibound.violating_alphas},
                                       {"note", semibound.note}};
        atomic_write(std::filesystem::path(config.output_dir) / "results.csv",
                     results_csv(result.records));
        atomic_write(std::filesystem::path(config.output_dir) / "results.json",
                     doc.dump(2) + "\n");
        atomic_write(std::filesystem::path(config.output_dir) / "eigenvalues.svg",
                     eigenvalue_plot_svg(result.records, result.target_exponent));
    }
    if (!converged) return 2;
    return checks ? 0 : 2;
}

int run_fit(const RunConfig& config) {
    ordered_json doc = load_results(config);
    const auto records = records_from_json(doc);
    const double p = doc.at("config").at("peak").at("p").get<double>();
    const double q = doc.at("config").at("peak").at("q").get<double>();
    const double target = doc.at("reference").at("target_exponent").get<double>();
    int j_max = 0;
    for (const auto& rec : records) j_max = std::max(j_max, rec.j);
    ordered_json fits;
    for (int j = 1; j <= j_max; ++j) {
        const auto leading = asympt::fit_leading(records, j, config.fit_window_fraction);
        const auto correction = asympt::fit_correction(records, j, leading, p, q, target,
                                                       config.fit_window_fraction);
        ordered_json entry;
        entry["leading"] = fit_json(leading);
        entry["correction"] = fit_json(correction.fit);
        entry["correction"]["resolved"] = correction.resolved;
        entry["correction"]["within_slack"] = correction.within_slack;
        entry["correction"]["binding_offset"] = correction.binding_offset;
        if (!correction.note.empty()) entry["correction"]["note"] = correction.note;
        fits[std::to_string(j)] = entry;
        if (leading.valid)
            std::printf("j=%d leading: exponent=%.6g coefficient=%.6g r2=%.6g window=[%g,%g]\n",
                        j, leading.exponent, leading.coefficient, leading.r_squared,
                        leading.window_lo, leading.window_hi);
        else
            std::printf("j=%d leading: unavailable (%s)\n", j, leading.note.c_str());
    }
    doc["fits"] = fits;
    atomic_write(std::filesystem::path(config.output_dir) / "results.json", doc.dump(2) + "\n");
    return 0;
}

int run_report(const RunConfig& config) {
    ordered_json doc = load_results(config);
    const auto records = records_from_json(doc);
    const double target = doc.at("reference").at("target_exponent").get<double>();
    const double a1 = doc.at("reference").at("model_eigenvalues").at(0).get<double>();
    const auto semibound =
        asympt::semibound_check(records, a1, config.sweep.alpha_threshold, target);

    bool sandwich_clean = true;
    for (const auto& rec : records)
        if (!rec.below_threshold && rec.note.empty())
            sandwich_clean = sandwich_clean && rec.sandwich_ok && rec.form_sandwich_ok;

    std::ostringstream text;
    text << "peakspec report\n===============\n\n";
    text << "records: " << records.size() << "\n";
    const auto& th = doc.at("sandwich_threshold");
    if (th.at("found").get<bool>())
        text << "smallest alpha with the discrete two-sided comparison holding: "
             << th.at("alpha").get<double>() << "\n";
    else
        text << "the discrete two-sided comparison did not hold at any swept alpha\n";
    text << "(the continuum threshold alpha_0 of the comparison forms is not quantified;\n"
            " the discrete onset above is reported without equating the two)\n\n";
    text << "semibound check (K = " << semibound.bound_constant
         << "): " << (semibound.passed ? "pass" : "FAIL");
    if (!semibound.violating_alphas.empty()) {
        text << "  violations at alpha =";
        for (double a : semibound.violating_alphas) text << " " << a;
    }
    text << "\n";
    if (!semibound.note.empty()) text << "  note: " << semibound.note << "\n";
    text << "minus-form semibounded (kappa < 1) for all records: ";
    bool all_semibounded = !records.empty();
    for (const auto& rec : records) all_semibounded = all_semibounded && rec.minus_semibounded;
    text << (all_semibounded ? "yes" : "no") << "\n";
    if (doc.contains("fits")) {
        text << "\nfits:\n";
        for (const auto& item : doc.at("fits").items()) {
            const auto& leading = item.value().at("leading");
            if (leading.at("valid").get<bool>())
                text << "  j=" << item.key() << ": exponent "
                     << leading.at("exponent").get<double>() << ", coefficient "
                     << leading.at("coefficient").get<double>() << ", r^2 "
                     << leading.at("r_squared").get<double>() << "\n";
            else
                text << "  j=" << item.key() << ": "
                     << leading.at("note").get<std::string>() << "\n";
        }
    }
    text << "\nchecks: " << ((semibound.passed && sandwich_clean) ? "pass" : "FAIL") << "\n";

    write_provenance(config);
    ordered_json report;
    report["semibound"] = {{"passed", semibound.passed},
                           {"bound_constant", semibound.bound_constant},
                           {"checked", semibound.checked},
                           {"skipped", semibound.skipped},
                           {"violating_alphas", semibound.violating_alphas},
                           {"note", semibound.note}};
    report["sandwich_clean"] = sandwich_clean;
    atomic_write(std::filesystem::path(config.output_dir) / "report.json",
                 report.dump(2) + "\n");
    atomic_write(std::filesystem::path(config.output_dir) / "report.txt", text.str());
    std::fputs(text.str().c_str(), stdout);
    return (semibound.passed && sandwich_clean) ? 0 : 2;
}

}  // namespace

int run(const RunConfig& config) {
    switch (config.command) {
        case Command::interval: return run_interval(config);
        case Command::model1d: return run_model1d(config);
        case Command::peak: return run_peak_or_sweep(config);
        case Command::sweep: return run_peak_or_sweep(config);
        case Command::fit: return run_fit(config);
        case Command::report: return run_report(config);
    }
    return 1;
}

}  // namespace peakspec::runio
