#include "lutlock/attack.hpp"
#include "lutlock/benchgen.hpp"
#include "lutlock/locker.hpp"
#include "lutlock/sweep.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace lutlock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDifferent = 1;
constexpr int kExitParse = 2;
constexpr int kExitIo = 3;
constexpr int kExitTimeout = 4;
constexpr int kExitInconsistent = 5;

int exit_code_for(const Error &e)
{
    switch (e.kind()) {
    case ErrorKind::Io:
        return kExitIo;
    case ErrorKind::OracleInconsistent:
        return kExitInconsistent;
    default:
        return kExitParse;
    }
}

std::string read_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// complete-or-absent files: write to a .partial then rename into place
void write_file(const std::string &path, const std::string &content)
{
    std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp);
        if (!out)
            throw Error(ErrorKind::Io, "cannot write '" + tmp + "'");
        out << content;
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorKind::Io, "cannot move '" + tmp + "' to '" + path + "'");
}

std::string stem_of(const std::string &path)
{
    return fs::path(path).stem().string();
}

std::string lower(std::string s)
{
    for (char &c : s)
        c = (char)std::tolower((unsigned char)c);
    return s;
}

struct CommonOpts {
    std::string config_path;
    RunConfig cfg;

    void load()
    {
        if (!config_path.empty())
            cfg = load_config_file(config_path, cfg);
    }
};

std::vector<PolicyKind> parse_policies(const std::string &arg)
{
    std::vector<PolicyKind> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty())
            return;
        auto p = policy_from_string(cur);
        if (!p)
            throw Error(ErrorKind::Precondition, "unknown policy '" + cur + "'");
        out.push_back(*p);
        cur.clear();
    };
    for (char c : arg) {
        if (c == ',')
            flush();
        else
            cur += c;
    }
    flush();
    if (out.empty())
        throw Error(ErrorKind::Precondition, "no policies given");
    return out;
}

int cmd_obfuscate(const std::string &bench_path, const std::string &policy_name, int n,
                  uint64_t seed, CommonOpts &common, const std::string &out_dir)
{
    common.load();
    auto pk = policy_from_string(policy_name);
    if (!pk) {
        std::cerr << "error: unknown policy '" << policy_name << "'\n";
        return kExitParse;
    }
    if (n < 1) {
        std::cerr << "error: --n must be at least 1\n";
        return kExitParse;
    }
    Netlist netlist = parse_bench_file(bench_path);
    Policy policy = common.cfg.policy(*pk, seed);
    ObfuscationResult result = obfuscate(netlist, policy, n, common.cfg.locker_config());

    fs::create_directories(out_dir);
    std::string base = (fs::path(out_dir) /
                        (stem_of(bench_path) + "_" + lower(to_string(*pk)) + "_n" +
                         std::to_string(n) + "_s" + std::to_string(seed)))
                           .string();
    write_file(base + ".bench", write_bench(result.obfuscated));
    write_file(base + ".key", write_key_file(result.correct_key));
    write_file(base + ".trace", write_trace_file(result.trace));

    std::cout << "achieved " << result.stats.achieved << "/" << result.stats.requested
              << " replacements, " << result.correct_key.size() << " key bits, "
              << result.stats.timing_rejections << " timing rejections, "
              << result.stats.cone_switches << " cone switches\n";
    std::cout << "wrote " << base << ".bench/.key/.trace\n";
    if (result.stats.achieved < result.stats.requested)
        std::cout << "warning: target unreachable, every remaining candidate was rejected\n";
    return kExitOk;
}

int cmd_attack(const std::string &obf_path, const std::string &orig_path, CommonOpts &common,
               uint64_t max_iters, uint64_t seed, const std::string &out_dir)
{
    common.load();
    Netlist obf = mark_all_luts_key(parse_bench_file(obf_path));
    Netlist orig = parse_bench_file(orig_path);
    Kpc kpc = to_kpc(obf);

    AttackLimits limits;
    limits.time_limit_seconds = common.cfg.time_limit_seconds;
    limits.max_iterations = max_iters;
    SolverConfig solver{common.cfg.solver, seed};

    AttackResult result = sat_attack(kpc, orig, limits, solver);

    fs::create_directories(out_dir);
    std::string base = (fs::path(out_dir) / (stem_of(obf_path) + "_attack")).string();
    write_file(base + ".txt", attack_result_text(result));
    write_file(base + ".json", attack_result_json(result, stem_of(orig_path)));

    std::cout << "iterations " << result.iterations << ", solver calls " << result.solver_calls
              << ", " << result.solver_seconds << " s, "
              << (result.verified ? "verified" : result.timed_out ? "timed out" : "UNVERIFIED")
              << "\n";
    std::cout << "wrote " << base << ".txt/.json\n";
    if (result.timed_out)
        return kExitTimeout;
    return result.verified ? kExitOk : kExitInconsistent;
}

int cmd_verify(const std::string &obf_path, const std::string &orig_path,
               const std::string &key_path, const std::string &solver_cmd)
{
    Netlist obf = parse_bench_file(obf_path);
    Netlist orig = parse_bench_file(orig_path);
    if (!key_path.empty()) {
        Assignment key = parse_key_file(read_file(key_path));
        obf = apply_key(mark_all_luts_key(obf), key);
    }
    EquivalenceResult eq = check_equivalence(obf, orig, SolverConfig{solver_cmd, 0});
    if (eq.equivalent) {
        std::cout << "EQUIVALENT\n";
        return kExitOk;
    }
    std::cout << "DIFFERENT witness:";
    for (const auto &[net, bit] : eq.witness)
        std::cout << " " << net << "=" << (bit ? 1 : 0);
    std::cout << "\n";
    return kExitDifferent;
}

int cmd_count_keys(const std::string &obf_path, const std::string &orig_path,
                   const std::string &mode, uint64_t samples, uint64_t seed,
                   const std::string &solver_cmd)
{
    Netlist obf = mark_all_luts_key(parse_bench_file(obf_path));
    Netlist orig = parse_bench_file(orig_path);
    Kpc kpc = to_kpc(obf);
    CountMode m;
    if (mode == "exact")
        m = CountMode::Exact;
    else if (mode == "sample")
        m = CountMode::Sample;
    else {
        std::cerr << "error: --mode must be exact or sample\n";
        return kExitParse;
    }
    KeyCount kc = count_valid_keys(kpc, orig, m, samples, seed, SolverConfig{solver_cmd, seed});
    if (kc.exact)
        std::cout << kc.count << "\n";
    else
        std::cout << kc.count << " (estimate: " << kc.valid_samples << "/" << kc.samples
                  << " sampled keys valid)\n";
    return kExitOk;
}

int cmd_sweep(const std::string &corpus_dir, const std::string &policies_arg,
              CommonOpts &common, const std::string &out_csv, const std::string &profile)
{
    common.load();
    if (profile == "full")
        common.cfg.time_limit_seconds = 1.1e4;
    else if (profile != "desk")
        throw Error(ErrorKind::Precondition, "profile must be desk or full");

    std::vector<std::string> paths;
    for (const auto &entry : fs::directory_iterator(corpus_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".bench")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty())
        throw Error(ErrorKind::Precondition, "no .bench files in '" + corpus_dir + "'");

    std::vector<PolicyKind> policies = parse_policies(policies_arg);
    std::vector<SweepRecord> records =
        run_sweep(paths, policies, common.cfg, out_csv, &std::cout);

    std::string summary = sweep_summary(records);
    std::cout << summary;
    write_file(out_csv + ".summary.txt", summary);
    return kExitOk;
}

int cmd_gen(const std::string &profile_name, int pis, int pos, int gates, int window,
            uint64_t seed, std::string out_path)
{
    GenProfile profile;
    if (!profile_name.empty()) {
        auto p = named_profile(profile_name);
        if (!p) {
            std::cerr << "error: unknown profile '" << profile_name << "'\n";
            return kExitParse;
        }
        profile = *p;
    } else {
        profile.name = "gen" + std::to_string(seed);
    }
    if (pis > 0)
        profile.n_pi = pis;
    if (pos > 0)
        profile.n_po = pos;
    if (gates > 0)
        profile.n_gates = gates;
    if (window > 0)
        profile.locality_window = window;
    if (seed > 0)
        profile.seed = seed;
    Netlist n = generate_circuit(profile);
    if (out_path.empty())
        out_path = profile.name + ".bench";
    write_file(out_path, write_bench(n));
    std::cout << "wrote " << out_path << " (" << n.primary_inputs().size() << " inputs, "
              << n.primary_outputs().size() << " outputs, " << n.gates().size() << " gates)\n";
    return kExitOk;
}

int cmd_dimacs_solve(const std::string &cnf_path)
{
    DimacsProblem problem = parse_dimacs(read_file(cnf_path));
    CdclSolver solver;
    for (int v = 0; v < problem.num_vars; v++)
        solver.new_var();
    for (const auto &c : problem.clauses)
        solver.add_clause(c);
    SolveResult r = solver.solve();
    if (r == SolveResult::Unsat) {
        std::cout << "s UNSATISFIABLE\n";
        return 20;
    }
    std::cout << "s SATISFIABLE\n";
    std::cout << "v";
    for (int v = 0; v < problem.num_vars; v++)
        std::cout << " " << (solver.model_value(v) ? v + 1 : -(v + 1));
    std::cout << " 0\n";
    return 10;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"LUT-based logic locking toolkit: obfuscate netlists, attack them with an "
                 "oracle-guided SAT attack, verify keys, count valid keys, run sweeps"};
    app.require_subcommand(1);

    CommonOpts common;

    // obfuscate
    auto *ob = app.add_subcommand("obfuscate", "replace gates with key-programmable LUTs");
    std::string ob_bench, ob_policy = "NB2_MO_HSC", ob_out_dir = ".";
    int ob_n = 0;
    uint64_t ob_seed = 1;
    ob->add_option("bench", ob_bench, "input bench file")->required();
    ob->add_option("--policy", ob_policy, "RND|FIC|HSC|MFO_HSC|MO_HSC|NB2_MO_HSC");
    ob->add_option("--n", ob_n, "number of gates to replace")->required();
    ob->add_option("--seed", ob_seed, "seed (RND gate order)");
    ob->add_option("--alpha", common.cfg.alpha, "output selection slack weight");
    ob->add_option("--beta", common.cfg.beta, "output selection cone-size weight");
    ob->add_option("--gamma", common.cfg.gamma, "delay overhead budget fraction");
    ob->add_option("--out-dir", ob_out_dir, "output directory");
    ob->add_option("--config", common.config_path, "key=value config file");

    // attack
    auto *at = app.add_subcommand("attack", "run the oracle-guided SAT attack");
    std::string at_obf, at_orig, at_out_dir = ".";
    uint64_t at_max_iters = 0, at_seed = 1;
    at->add_option("obfuscated", at_obf, "obfuscated bench file")->required();
    at->add_option("original", at_orig, "original bench file (oracle)")->required();
    at->add_option("--time-limit", common.cfg.time_limit_seconds, "seconds");
    at->add_option("--max-iters", at_max_iters, "iteration cap (0 = unlimited)");
    at->add_option("--seed", at_seed, "solver decision randomization seed");
    at->add_option("--solver", common.cfg.solver, "external DIMACS solver command");
    at->add_option("--out-dir", at_out_dir, "output directory");
    at->add_option("--config", common.config_path, "key=value config file");

    // verify
    auto *ve = app.add_subcommand("verify", "equivalence check two netlists");
    std::string ve_obf, ve_orig, ve_key, ve_solver;
    ve->add_option("obfuscated", ve_obf, "obfuscated (or any) bench file")->required();
    ve->add_option("original", ve_orig, "reference bench file")->required();
    ve->add_option("--key", ve_key, "key file applied to the first netlist");
    ve->add_option("--solver", ve_solver, "external DIMACS solver command");

    // count-keys
    auto *ck = app.add_subcommand("count-keys", "count keys matching the oracle");
    std::string ck_obf, ck_orig, ck_mode = "exact", ck_solver;
    uint64_t ck_samples = 1000, ck_seed = 1;
    ck->add_option("obfuscated", ck_obf, "obfuscated bench file")->required();
    ck->add_option("original", ck_orig, "original bench file (oracle)")->required();
    ck->add_option("--mode", ck_mode, "exact|sample");
    ck->add_option("--samples", ck_samples, "sample mode: keys to try");
    ck->add_option("--seed", ck_seed, "sample mode seed");
    ck->add_option("--solver", ck_solver, "external DIMACS solver command");

    // sweep
    auto *sw = app.add_subcommand("sweep", "factorial benchmark x policy x n x seed runs");
    std::string sw_dir, sw_policies = "RND,FIC,HSC,MFO_HSC,MO_HSC,NB2_MO_HSC";
    std::string sw_out = "sweep.csv", sw_profile = "desk", sw_ngrid, sw_seeds;
    sw->add_option("corpus", sw_dir, "directory of .bench files")->required();
    sw->add_option("--policies", sw_policies, "comma-separated policy list");
    sw->add_option("--out", sw_out, "CSV output path (appended, resumable)");
    sw->add_option("--n-grid", sw_ngrid, "comma-separated LUT counts");
    sw->add_option("--seeds", sw_seeds, "comma-separated seeds");
    sw->add_option("--time-limit", common.cfg.time_limit_seconds, "seconds per cell");
    sw->add_option("--workers", common.cfg.workers, "worker threads (0 = auto)");
    sw->add_option("--solver", common.cfg.solver, "external DIMACS solver command");
    sw->add_option("--profile", sw_profile, "desk|full (full raises the time limit)");
    sw->add_option("--config", common.config_path, "key=value config file");

    // gen
    auto *ge = app.add_subcommand("gen", "generate a deterministic random benchmark");
    std::string ge_profile, ge_out;
    int ge_pis = 0, ge_pos = 0, ge_gates = 0, ge_window = 0;
    uint64_t ge_seed = 0;
    ge->add_option("--profile", ge_profile, "named size profile (c432, c880, ...)");
    ge->add_option("--pis", ge_pis, "primary input count");
    ge->add_option("--pos", ge_pos, "primary output count");
    ge->add_option("--gates", ge_gates, "gate count");
    ge->add_option("--window", ge_window, "input locality window");
    ge->add_option("--seed", ge_seed, "generator seed");
    ge->add_option("--out", ge_out, "output path");

    // dimacs-solve
    auto *ds = app.add_subcommand("dimacs-solve", "solve a DIMACS CNF with the internal engine");
    std::string ds_path;
    ds->add_option("cnf", ds_path, "DIMACS cnf file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ob->parsed()) {
            // CLI flags override config-file values
            std::string flags_cfg = common.config_path;
            if (!flags_cfg.empty()) {
                RunConfig from_file = load_config_file(flags_cfg);
                if (!ob->count("--alpha"))
                    common.cfg.alpha = from_file.alpha;
                if (!ob->count("--beta"))
                    common.cfg.beta = from_file.beta;
                if (!ob->count("--gamma"))
                    common.cfg.gamma = from_file.gamma;
                common.cfg.pi_p1 = from_file.pi_p1;
                common.cfg.lut_delay = from_file.lut_delay;
                common.cfg.max_lut_inputs = from_file.max_lut_inputs;
                common.config_path.clear();
            }
            return cmd_obfuscate(ob_bench, ob_policy, ob_n, ob_seed, common, ob_out_dir);
        }
        if (at->parsed()) {
            if (!common.config_path.empty()) {
                RunConfig from_file = load_config_file(common.config_path);
                if (!at->count("--time-limit"))
                    common.cfg.time_limit_seconds = from_file.time_limit_seconds;
                if (!at->count("--solver"))
                    common.cfg.solver = from_file.solver;
                common.config_path.clear();
            }
            return cmd_attack(at_obf, at_orig, common, at_max_iters, at_seed, at_out_dir);
        }
        if (ve->parsed())
            return cmd_verify(ve_obf, ve_orig, ve_key, ve_solver);
        if (ck->parsed())
            return cmd_count_keys(ck_obf, ck_orig, ck_mode, ck_samples, ck_seed, ck_solver);
        if (sw->parsed()) {
            if (!common.config_path.empty()) {
                RunConfig base = load_config_file(common.config_path);
                if (!sw->count("--time-limit"))
                    common.cfg.time_limit_seconds = base.time_limit_seconds;
                if (!sw->count("--workers"))
                    common.cfg.workers = base.workers;
                if (!sw->count("--solver"))
                    common.cfg.solver = base.solver;
                common.cfg.seeds = base.seeds;
                common.cfg.n_grid = base.n_grid;
                common.cfg.alpha = base.alpha;
                common.cfg.beta = base.beta;
                common.cfg.gamma = base.gamma;
                common.cfg.pi_p1 = base.pi_p1;
                common.cfg.lut_delay = base.lut_delay;
                common.cfg.max_lut_inputs = base.max_lut_inputs;
                common.config_path.clear();
            }
            if (!sw_ngrid.empty()) {
                common.cfg.n_grid.clear();
                for (const auto &tok : CLI::detail::split(sw_ngrid, ','))
                    common.cfg.n_grid.push_back(std::stoi(tok));
            }
            if (!sw_seeds.empty()) {
                common.cfg.seeds.clear();
                for (const auto &tok : CLI::detail::split(sw_seeds, ','))
                    common.cfg.seeds.push_back(std::stoull(tok));
            }
            return cmd_sweep(sw_dir, sw_policies, common, sw_out, sw_profile);
        }
        if (ge->parsed())
            return cmd_gen(ge_profile, ge_pis, ge_pos, ge_gates, ge_window, ge_seed, ge_out);
        if (ds->parsed())
            return cmd_dimacs_solve(ds_path);
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitOk;
}
