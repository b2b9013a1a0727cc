#pragma once

#include "lutlock/attack.hpp"
#include "lutlock/locker.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lutlock {

struct RunConfig {
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 0.1;
    double pi_p1 = 0.5;
    int lut_delay = 2;
    size_t max_lut_inputs = 6;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<int> n_grid = {1, 2, 4, 8, 16, 24, 32};
    double time_limit_seconds = 600.0; // per sweep cell; "full" raises to 1.1e4
    std::string solver;                // empty = internal engine
    int workers = 0;                   // 0 = hardware concurrency

    LockerConfig locker_config() const { return {pi_p1, lut_delay, max_lut_inputs}; }
    Policy policy(PolicyKind kind, uint64_t seed) const
    {
        return Policy{kind, alpha, beta, gamma, seed};
    }
};

/// Apply "key = value" overrides (one per line, '#' comments) to a config.
void apply_config_text(RunConfig &cfg, const std::string &text);
RunConfig load_config_file(const std::string &path, RunConfig base = {});

struct SweepRecord {
    std::string benchmark;
    std::string policy;
    int n_luts = 0;
    uint64_t seed = 0;
    uint64_t iterations = 0;
    double seconds = 0.0;
    int key_bits = 0;
    bool verified = false;
    bool timed_out = false;
};

extern const char *const kSweepCsvHeader; // benchmark,policy,n_luts,seed,...

std::string sweep_record_csv(const SweepRecord &r);
SweepRecord parse_sweep_record(const std::string &line);

/// Read the rows of an existing CSV (skips the header; throws on bad rows).
std::vector<SweepRecord> read_sweep_csv(const std::string &path);

/// Full factorial benchmarks x policies x n-grid x seeds. Rows are appended
/// to `csv_path` as soon as each cell finishes; cells already present in the
/// file are skipped. Returns all records (existing plus new).
std::vector<SweepRecord> run_sweep(const std::vector<std::string> &bench_paths,
                                   const std::vector<PolicyKind> &policies,
                                   const RunConfig &cfg, const std::string &csv_path,
                                   std::ostream *log = nullptr);

// -- small statistics helpers used by the sweep summary ---------------------

double median(std::vector<double> values);

/// Spearman rank correlation with average ranks on ties; NaN if degenerate.
double spearman_rho(const std::vector<double> &x, const std::vector<double> &y);

struct ExpFit {
    double rate = 0.0;   // b in log(y) = a + b*x
    double r2 = 0.0;     // goodness of fit on the log scale
    bool valid = false;
};

/// Least-squares exponential fit on log(y); y values must be positive.
ExpFit fit_exponential(const std::vector<double> &x, const std::vector<double> &y);

/// Per-policy growth summary over a set of sweep records; explicitly labeled
/// as machine-local numbers.
std::string sweep_summary(const std::vector<SweepRecord> &records);

} // namespace lutlock
