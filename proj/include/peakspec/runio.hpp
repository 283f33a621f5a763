#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "peakspec/asympt.hpp"

namespace peakspec::runio {

enum class Command { interval, model1d, peak, sweep, fit, report };

struct IntervalConfig {
    double half_length = 1.0;
    double robin = 0.0;
    int j = 1;
};

struct Model1dConfig {
    double c1 = 0.0;
    double c2 = 1.0;
    double p = 1.2;
    double q = 1.5;
    std::string domain = "full";  // full | inner | outer
    double b = 1.0;
    int j_max = 5;
    int cells = 640;
};

struct RunConfig {
    Command command = Command::sweep;
    std::string output_dir = "peakspec_out";
    std::uint64_t seed = 12345;
    asympt::SweepConfig sweep;       // carries peak/grid/solver settings
    double peak_alpha = 16.0;        // single-alpha commands
    double fit_window_fraction = 0.5;
    IntervalConfig interval;
    Model1dConfig model1d;

    nlohmann::ordered_json resolved() const;  // fully-materialized echo
};

// Strict parser: unknown keys, duplicate keys and out-of-range values are
// rejected with messages naming the offending field.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_json(const nlohmann::ordered_json& doc);

// Artifact serializers (exposed for tests).
std::string results_csv(const std::vector<asympt::SweepRecord>& records);
nlohmann::ordered_json results_document(const RunConfig& config,
                                        const asympt::SweepResult& result);
std::string eigenvalue_plot_svg(const std::vector<asympt::SweepRecord>& records,
                                double target_exponent);

void atomic_write(const std::filesystem::path& path, const std::string& content);

// Executes the configured command.  Returns 0 when the requested checks
// pass, 2 on solver non-convergence (partial artifacts are still written);
// configuration errors throw std::invalid_argument before any work starts.
int run(const RunConfig& config);

}  // namespace peakspec::runio
