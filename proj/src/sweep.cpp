#include "lutlock/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace lutlock {

// ---------------------------------------------------------------------------
// config

namespace {

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace((unsigned char)c)) {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

} // namespace

void apply_config_text(RunConfig &cfg, const std::string &text)
{
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        line_no++;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw Error(ErrorKind::Syntax, "expected key = value", line_no);
            continue;
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "alpha")
                cfg.alpha = std::stod(value);
            else if (key == "beta")
                cfg.beta = std::stod(value);
            else if (key == "gamma")
                cfg.gamma = std::stod(value);
            else if (key == "pi_p1")
                cfg.pi_p1 = std::stod(value);
            else if (key == "lut_delay")
                cfg.lut_delay = std::stoi(value);
            else if (key == "max_lut_inputs")
                cfg.max_lut_inputs = (size_t)std::stoul(value);
            else if (key == "time_limit")
                cfg.time_limit_seconds = std::stod(value);
            else if (key == "solver")
                cfg.solver = value == "internal" ? "" : value;
            else if (key == "workers")
                cfg.workers = std::stoi(value);
            else if (key == "seeds") {
                cfg.seeds.clear();
                for (const auto &tok : split(value, ','))
                    cfg.seeds.push_back(std::stoull(tok));
            } else if (key == "n_grid") {
                cfg.n_grid.clear();
                for (const auto &tok : split(value, ','))
                    cfg.n_grid.push_back(std::stoi(tok));
            } else {
                throw Error(ErrorKind::Syntax, "unknown config key '" + key + "'", line_no);
            }
        } catch (const Error &) {
            throw;
        } catch (const std::exception &) {
            throw Error(ErrorKind::Syntax, "bad value for '" + key + "'", line_no);
        }
    }
    if (cfg.seeds.empty())
        throw Error(ErrorKind::Precondition, "at least one seed required");
    for (size_t i = 1; i < cfg.n_grid.size(); i++)
        if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
            throw Error(ErrorKind::Precondition, "n_grid must be strictly increasing");
    if (cfg.time_limit_seconds <= 0)
        throw Error(ErrorKind::Precondition, "time limit must be positive");
}

RunConfig load_config_file(const std::string &path, RunConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(base, buf.str());
    return base;
}

// ---------------------------------------------------------------------------
// CSV

const char *const kSweepCsvHeader =
    "benchmark,policy,n_luts,seed,iterations,seconds,key_bits,verified,timed_out";

std::string sweep_record_csv(const SweepRecord &r)
{
    std::ostringstream out;
    out << r.benchmark << ',' << r.policy << ',' << r.n_luts << ',' << r.seed << ','
        << r.iterations << ',' << r.seconds << ',' << r.key_bits << ',' << (r.verified ? 1 : 0)
        << ',' << (r.timed_out ? 1 : 0);
    return out.str();
}

SweepRecord parse_sweep_record(const std::string &line)
{
    auto fields = split(line, ',');
    if (fields.size() != 9)
        throw Error(ErrorKind::Syntax, "bad CSV row: " + line);
    SweepRecord r;
    r.benchmark = fields[0];
    r.policy = fields[1];
    r.n_luts = std::stoi(fields[2]);
    r.seed = std::stoull(fields[3]);
    r.iterations = std::stoull(fields[4]);
    r.seconds = std::stod(fields[5]);
    r.key_bits = std::stoi(fields[6]);
    r.verified = fields[7] == "1" || fields[7] == "true";
    r.timed_out = fields[8] == "1" || fields[8] == "true";
    return r;
}

std::vector<SweepRecord> read_sweep_csv(const std::string &path)
{
    std::vector<SweepRecord> records;
    std::ifstream in(path);
    if (!in)
        return records;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (first && line == kSweepCsvHeader) {
            first = false;
            continue;
        }
        first = false;
        records.push_back(parse_sweep_record(line));
    }
    return records;
}

// ---------------------------------------------------------------------------
// sweep

namespace {

std::string bench_stem(const std::string &path)
{
    std::string stem = path;
    if (auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos)
        stem = stem.substr(0, dot);
    return stem;
}

struct Cell {
    size_t bench_index;
    PolicyKind policy;
    int n;
    uint64_t seed;
};

} // namespace

std::vector<SweepRecord> run_sweep(const std::vector<std::string> &bench_paths,
                                   const std::vector<PolicyKind> &policies,
                                   const RunConfig &cfg, const std::string &csv_path,
                                   std::ostream *log)
{
    if (bench_paths.empty())
        throw Error(ErrorKind::Precondition, "no bench files in the corpus");

    std::vector<Netlist> benches;
    std::vector<std::string> names;
    for (const auto &path : bench_paths) {
        benches.push_back(parse_bench_file(path));
        names.push_back(bench_stem(path));
    }

    std::vector<SweepRecord> existing = read_sweep_csv(csv_path);
    std::set<std::string> done;
    auto cell_id = [](const std::string &bench, const std::string &policy, int n,
                      uint64_t seed) {
        return bench + "|" + policy + "|" + std::to_string(n) + "|" + std::to_string(seed);
    };
    for (const auto &r : existing)
        done.insert(cell_id(r.benchmark, r.policy, r.n_luts, r.seed));

    std::vector<Cell> todo;
    for (size_t b = 0; b < benches.size(); b++)
        for (PolicyKind p : policies)
            for (int n : cfg.n_grid)
                for (uint64_t seed : cfg.seeds)
                    if (!done.count(cell_id(names[b], to_string(p), n, seed)))
                        todo.push_back({b, p, n, seed});

    std::ofstream csv;
    bool fresh = existing.empty() && !std::ifstream(csv_path).good();
    csv.open(csv_path, std::ios::app);
    if (!csv)
        throw Error(ErrorKind::Io, "cannot open '" + csv_path + "' for append");
    if (fresh)
        csv << kSweepCsvHeader << "\n" << std::flush;

    std::mutex mu;
    std::vector<SweepRecord> fresh_records;
    std::atomic<size_t> next{0};

    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= todo.size())
                return;
            const Cell &cell = todo[i];
            SweepRecord rec;
            rec.benchmark = names[cell.bench_index];
            rec.policy = to_string(cell.policy);
            rec.n_luts = cell.n;
            rec.seed = cell.seed;
            try {
                Policy policy = cfg.policy(cell.policy, cell.seed);
                ObfuscationResult obf =
                    obfuscate(benches[cell.bench_index], policy, cell.n, cfg.locker_config());
                Kpc kpc = to_kpc(obf.obfuscated);
                AttackLimits limits;
                limits.time_limit_seconds = cfg.time_limit_seconds;
                SolverConfig solver{cfg.solver, cell.seed};
                AttackResult attack =
                    sat_attack(kpc, benches[cell.bench_index], limits, solver);
                rec.iterations = attack.iterations;
                rec.seconds = attack.solver_seconds;
                rec.key_bits = (int)kpc.key_inputs.size();
                rec.verified = attack.verified;
                rec.timed_out = attack.timed_out;
            } catch (const std::exception &e) {
                rec.timed_out = true; // hard failure: counts against the cell
                std::lock_guard<std::mutex> lock(mu);
                if (log)
                    *log << "cell " << rec.benchmark << "/" << rec.policy << "/n" << rec.n_luts
                         << "/s" << rec.seed << " failed: " << e.what() << "\n";
            }
            std::lock_guard<std::mutex> lock(mu);
            csv << sweep_record_csv(rec) << "\n" << std::flush;
            fresh_records.push_back(rec);
            if (log)
                *log << sweep_record_csv(rec) << "\n";
        }
    };

    int workers = cfg.workers > 0 ? cfg.workers : (int)std::thread::hardware_concurrency();
    workers = std::max(1, std::min<int>(workers, (int)todo.size() + 1));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; w++)
        pool.emplace_back(worker);
    for (auto &t : pool)
        t.join();

    std::vector<SweepRecord> all = std::move(existing);
    all.insert(all.end(), fresh_records.begin(), fresh_records.end());
    return all;
}

// ---------------------------------------------------------------------------
// statistics

double median(std::vector<double> values)
{
    if (values.empty())
        return std::nan("");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::vector<double> average_ranks(const std::vector<double> &v)
{
    size_t n = v.size();
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; i++)
        idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]])
            j++;
        double rank = 0.5 * ((double)i + (double)j) + 1.0;
        for (size_t k = i; k <= j; k++)
            ranks[idx[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double> &x, const std::vector<double> &y)
{
    size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; i++) {
        mx += x[i];
        my += y[i];
    }
    mx /= (double)n;
    my /= (double)n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; i++) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0)
        return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

double spearman_rho(const std::vector<double> &x, const std::vector<double> &y)
{
    if (x.size() != y.size() || x.size() < 2)
        return std::nan("");
    return pearson(average_ranks(x), average_ranks(y));
}

ExpFit fit_exponential(const std::vector<double> &x, const std::vector<double> &y)
{
    ExpFit fit;
    if (x.size() != y.size() || x.size() < 2)
        return fit;
    std::vector<double> ly;
    for (double v : y) {
        if (v <= 0)
            return fit;
        ly.push_back(std::log(v));
    }
    size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; i++) {
        mx += x[i];
        my += ly[i];
    }
    mx /= (double)n;
    my /= (double)n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; i++) {
        sxy += (x[i] - mx) * (ly[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx <= 0)
        return fit;
    fit.rate = sxy / sxx;
    double ss_res = 0;
    for (size_t i = 0; i < n; i++) {
        double pred = my + fit.rate * (x[i] - mx);
        ss_res += (ly[i] - pred) * (ly[i] - pred);
    }
    fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    fit.valid = true;
    return fit;
}

std::string sweep_summary(const std::vector<SweepRecord> &records)
{
    std::ostringstream out;
    out << "# growth summary (machine-local numbers, not comparable across hosts)\n";
    std::set<std::string> benchmarks, policies;
    for (const auto &r : records) {
        benchmarks.insert(r.benchmark);
        policies.insert(r.policy);
    }
    for (const auto &bench : benchmarks) {
        for (const auto &policy : policies) {
            std::map<int, std::vector<double>> by_n;
            for (const auto &r : records)
                if (r.benchmark == bench && r.policy == policy)
                    by_n[r.n_luts].push_back((double)r.iterations);
            if (by_n.empty())
                continue;
            std::vector<double> xs, med;
            out << bench << " " << policy << " medians:";
            for (auto &[n, vals] : by_n) {
                double m = median(vals);
                out << " n" << n << "=" << m;
                xs.push_back((double)n);
                med.push_back(m);
            }
            out << "\n";
            double rho = spearman_rho(xs, med);
            out << bench << " " << policy << " spearman_iters_vs_n=" << rho;
            ExpFit fit = fit_exponential(xs, med);
            if (fit.valid)
                out << " exp_rate=" << fit.rate << " r2=" << fit.r2;
            out << "\n";
        }
    }
    return out.str();
}

} // namespace lutlock
