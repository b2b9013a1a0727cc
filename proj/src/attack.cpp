#include "lutlock/attack.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

namespace lutlock {

namespace {

double now_s()
{
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

Kpc to_kpc(const Netlist &obfuscated)
{
    std::vector<Gate> gates;
    for (const auto &[id, g] : obfuscated.gates()) {
        Gate copy = g;
        if (copy.kind == GateKind::Lut && copy.content_is_key)
            std::fill(copy.lut_content.begin(), copy.lut_content.end(), 0);
        gates.push_back(std::move(copy));
    }
    Kpc kpc{Netlist(obfuscated.name(), obfuscated.primary_inputs(),
                    obfuscated.primary_outputs(), std::move(gates)),
            {}};
    kpc.key_inputs = key_bit_names(kpc.netlist);
    return kpc;
}

Netlist mark_all_luts_key(const Netlist &n)
{
    std::vector<Gate> gates;
    for (const auto &[id, g] : n.gates()) {
        Gate copy = g;
        if (copy.kind == GateKind::Lut)
            copy.content_is_key = true;
        gates.push_back(std::move(copy));
    }
    return Netlist(n.name(), n.primary_inputs(), n.primary_outputs(), std::move(gates));
}

Netlist apply_key(const Netlist &n, const Assignment &key)
{
    std::vector<Gate> gates;
    for (const auto &[id, g] : n.gates()) {
        Gate copy = g;
        if (copy.kind == GateKind::Lut && copy.content_is_key) {
            for (size_t i = 0; i < copy.lut_content.size(); i++) {
                auto it = key.find(key_bit_name(id, i));
                if (it == key.end())
                    throw Error(ErrorKind::MissingBit,
                                "missing key bit '" + key_bit_name(id, i) + "'");
                copy.lut_content[i] = it->second ? 1 : 0;
            }
            copy.content_is_key = false;
        }
        gates.push_back(std::move(copy));
    }
    return Netlist(n.name(), n.primary_inputs(), n.primary_outputs(), std::move(gates));
}

OracleFn make_oracle(const Netlist &original, const std::vector<std::string> &pi_order,
                     const std::vector<std::string> &po_order)
{
    auto eval = std::make_shared<Evaluator>(original);
    if (!eval->key_names().empty())
        throw Error(ErrorKind::Precondition, "oracle netlist must not contain key bits");

    std::vector<int> pi_map(original.primary_inputs().size(), -1);
    {
        std::map<std::string, int> idx;
        for (size_t i = 0; i < pi_order.size(); i++)
            idx[pi_order[i]] = (int)i;
        const auto &pis = original.primary_inputs();
        for (size_t i = 0; i < pis.size(); i++) {
            auto it = idx.find(pis[i]);
            if (it == idx.end())
                throw Error(ErrorKind::Precondition,
                            "oracle input '" + pis[i] + "' missing from the attacked netlist");
            pi_map[i] = it->second;
        }
    }
    std::vector<int> po_map(po_order.size(), -1);
    {
        std::map<std::string, int> idx;
        const auto &pos = original.primary_outputs();
        for (size_t i = 0; i < pos.size(); i++)
            idx.emplace(pos[i], (int)i);
        for (size_t i = 0; i < po_order.size(); i++) {
            auto it = idx.find(po_order[i]);
            if (it == idx.end())
                throw Error(ErrorKind::Precondition,
                            "output '" + po_order[i] + "' missing from the oracle netlist");
            po_map[i] = it->second;
        }
    }

    return [eval, pi_map, po_map](const std::vector<uint8_t> &pi) {
        std::vector<uint8_t> mapped(pi_map.size(), 0);
        for (size_t i = 0; i < pi_map.size(); i++)
            mapped[i] = pi.at(pi_map[i]);
        std::vector<uint8_t> po = eval->run_po(mapped);
        std::vector<uint8_t> out(po_map.size(), 0);
        for (size_t i = 0; i < po_map.size(); i++)
            out[i] = po[po_map[i]];
        return out;
    };
}

// ---------------------------------------------------------------------------
// equivalence

EquivalenceResult check_equivalence(const Netlist &a, const Netlist &b,
                                    const SolverConfig &solver)
{
    auto sorted = [](const std::vector<std::string> &v) {
        std::vector<std::string> s(v);
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    };
    if (sorted(a.primary_inputs()) != sorted(b.primary_inputs()))
        throw Error(ErrorKind::Precondition, "primary input sets differ");
    if (sorted(a.primary_outputs()) != sorted(b.primary_outputs()))
        throw Error(ErrorKind::Precondition, "primary output sets differ");
    if (!key_bit_names(a).empty() || !key_bit_names(b).empty())
        throw Error(ErrorKind::Precondition, "equivalence check needs key-free netlists");

    const auto &pis = a.primary_inputs();
    if (pis.size() <= 12) {
        Evaluator ea(a);
        OracleFn fb = make_oracle(b, a.primary_inputs(), a.primary_outputs());
        std::vector<uint8_t> bits(pis.size(), 0);
        for (uint64_t pat = 0; pat < (uint64_t{1} << pis.size()); pat++) {
            for (size_t i = 0; i < pis.size(); i++)
                bits[i] = (pat >> i) & 1;
            if (ea.run_po(bits) != fb(bits)) {
                EquivalenceResult r{false, {}};
                for (size_t i = 0; i < pis.size(); i++)
                    r.witness[pis[i]] = bits[i] != 0;
                return r;
            }
        }
        return {true, {}};
    }

    Cnf cnf;
    CnfBuilder builder(cnf);
    std::map<std::string, int> no_keys_a, no_keys_b;
    auto nets_a = builder.encode(a, no_keys_a);
    auto nets_b = builder.encode(b, no_keys_b);
    std::vector<Lit> any_diff;
    for (const auto &po : a.primary_outputs()) {
        Sig d = builder.make_xor(nets_a.at(po), nets_b.at(po));
        if (d.is_const) {
            if (d.cval) {
                EquivalenceResult r{false, {}};
                for (const auto &pi : pis)
                    r.witness[pi] = false;
                return r;
            }
            continue;
        }
        any_diff.push_back(d.lit);
    }
    if (any_diff.empty())
        return {true, {}};
    cnf.add(std::move(any_diff));

    auto backend = make_backend(solver.command, solver.seed);
    size_t cursor = 0;
    sync_to_backend(*backend, cnf, cursor);
    SolveResult res = backend->solve();
    if (res == SolveResult::Unknown)
        throw Error(ErrorKind::Precondition, "equivalence check did not finish");
    if (res == SolveResult::Unsat)
        return {true, {}};
    EquivalenceResult r{false, {}};
    for (const auto &pi : pis) {
        auto it = cnf.pi_vars.find(pi);
        r.witness[pi] = it != cnf.pi_vars.end() && backend->model_value(it->second);
    }
    return r;
}

// ---------------------------------------------------------------------------
// sat attack

AttackResult sat_attack(const Kpc &kpc, const Netlist &oracle, const AttackLimits &limits,
                        const SolverConfig &solver)
{
    const Netlist &net = kpc.netlist;
    double t_start = now_s();
    auto remaining = [&] {
        if (limits.time_limit_seconds <= 0)
            return 0.0; // unlimited
        double left = limits.time_limit_seconds - (now_s() - t_start);
        return std::max(left, 0.001);
    };
    auto out_of_time = [&] {
        return limits.time_limit_seconds > 0 &&
               now_s() - t_start >= limits.time_limit_seconds;
    };

    OracleFn ask = make_oracle(oracle, net.primary_inputs(), net.primary_outputs());

    Cnf cnf;
    CnfBuilder builder(cnf);
    cnf.key_vars.assign(2, {});
    cnf.nets.push_back(builder.encode(net, cnf.key_vars[0]));
    cnf.nets.push_back(builder.encode(net, cnf.key_vars[1]));

    Lit activate = mk_lit(cnf.new_var());
    {
        std::vector<Lit> clause{neg_lit(activate)};
        for (const auto &po : net.primary_outputs()) {
            Sig d = builder.make_xor(cnf.nets[0].at(po), cnf.nets[1].at(po));
            if (d.is_const) {
                if (d.cval)
                    clause.push_back(activate); // tautology: difference always exists
                continue;
            }
            cnf.diff_vars.push_back(lit_var(d.lit));
            clause.push_back(d.lit);
        }
        cnf.add(std::move(clause));
    }

    auto backend = make_backend(solver.command, solver.seed);
    size_t cursor = 0;
    sync_to_backend(*backend, cnf, cursor);

    AttackResult result;
    auto finish_stats = [&] {
        result.solver_calls = backend->solve_calls();
        result.solver_seconds = backend->solve_seconds();
    };

    while (true) {
        SolveResult res = backend->solve({activate}, remaining());
        if (res == SolveResult::Unknown || (res == SolveResult::Sat && out_of_time())) {
            result.timed_out = true;
            finish_stats();
            return result;
        }
        if (res == SolveResult::Unsat)
            break;

        // a discriminating input exists: ask the oracle, then force both key
        // copies to reproduce the oracle's answer on it
        std::vector<uint8_t> pi_bits(net.primary_inputs().size(), 0);
        DipRecord dip;
        std::map<std::string, bool> pi_consts;
        for (size_t i = 0; i < net.primary_inputs().size(); i++) {
            const std::string &name = net.primary_inputs()[i];
            auto it = cnf.pi_vars.find(name);
            bool v = it != cnf.pi_vars.end() && backend->model_value(it->second);
            pi_bits[i] = v ? 1 : 0;
            dip.pi[name] = v;
            pi_consts[name] = v;
        }
        std::vector<uint8_t> po_bits = ask(pi_bits);
        for (size_t i = 0; i < net.primary_outputs().size(); i++)
            dip.po[net.primary_outputs()[i]] = po_bits[i] != 0;

        for (int copy = 0; copy < 2; copy++) {
            auto nets = builder.encode(net, cnf.key_vars[copy], pi_consts);
            for (size_t i = 0; i < net.primary_outputs().size(); i++) {
                if (!builder.force(nets.at(net.primary_outputs()[i]), po_bits[i] != 0))
                    throw Error(ErrorKind::OracleInconsistent,
                                "oracle disagrees with the key-independent logic");
            }
        }
        sync_to_backend(*backend, cnf, cursor);

        result.dips.push_back(std::move(dip));
        result.iterations++;
        if (limits.max_iterations > 0 && result.iterations >= limits.max_iterations) {
            result.timed_out = true;
            finish_stats();
            return result;
        }
    }

    // no discriminating input remains: any key consistent with all recorded
    // observations is correct
    SolveResult res = backend->solve({neg_lit(activate)}, remaining());
    if (res == SolveResult::Unknown) {
        result.timed_out = true;
        finish_stats();
        return result;
    }
    if (res == SolveResult::Unsat)
        throw Error(ErrorKind::OracleInconsistent,
                    "no key is consistent with the oracle (inconsistent inputs)");

    for (const auto &name : kpc.key_inputs) {
        auto it = cnf.key_vars[0].find(name);
        result.recovered_key[name] =
            it != cnf.key_vars[0].end() && backend->model_value(it->second);
    }
    finish_stats();

    Netlist unlocked = apply_key(net, result.recovered_key);
    result.verified = check_equivalence(unlocked, oracle, solver).equivalent;
    return result;
}

// ---------------------------------------------------------------------------
// valid key counting

namespace {

uint64_t enumerate_keys(const Kpc &kpc, Cnf &cnf, const SolverConfig &solver)
{
    auto backend = make_backend(solver.command, solver.seed);
    size_t cursor = 0;
    sync_to_backend(*backend, cnf, cursor);

    const auto &key_map = cnf.key_vars.at(0);
    uint64_t models = 0;
    while (backend->solve() == SolveResult::Sat) {
        models++;
        std::vector<Lit> block;
        block.reserve(key_map.size());
        for (const auto &[name, var] : key_map)
            block.push_back(backend->model_value(var) ? neg_lit(mk_lit(var)) : mk_lit(var));
        if (block.empty())
            break; // single model over zero constrained bits
        backend->add_clause(block);
    }
    size_t unconstrained = kpc.key_inputs.size() - key_map.size();
    return models << unconstrained;
}

} // namespace

uint64_t count_keys_consistent_with(const Kpc &kpc, const std::vector<DipRecord> &dips,
                                    const SolverConfig &solver)
{
    if (kpc.key_inputs.size() > 24)
        throw Error(ErrorKind::Precondition, "too many key bits to enumerate");
    Cnf cnf;
    CnfBuilder builder(cnf);
    cnf.key_vars.assign(1, {});
    for (const auto &dip : dips) {
        std::map<std::string, bool> pi_consts(dip.pi.begin(), dip.pi.end());
        auto nets = builder.encode(kpc.netlist, cnf.key_vars[0], pi_consts);
        for (const auto &[po, value] : dip.po)
            if (!builder.force(nets.at(po), value))
                return 0;
    }
    return enumerate_keys(kpc, cnf, solver);
}

KeyCount count_valid_keys(const Kpc &kpc, const Netlist &oracle, CountMode mode,
                          uint64_t samples, uint64_t seed, const SolverConfig &solver)
{
    size_t key_bits = kpc.key_inputs.size();

    if (mode == CountMode::Sample) {
        std::mt19937_64 rng(seed);
        KeyCount kc;
        kc.exact = false;
        kc.samples = samples;
        for (uint64_t s = 0; s < samples; s++) {
            Assignment key;
            for (const auto &name : kpc.key_inputs)
                key[name] = (rng() & 1) != 0;
            if (check_equivalence(apply_key(kpc.netlist, key), oracle, solver).equivalent)
                kc.valid_samples++;
        }
        long double space = std::pow(2.0L, (long double)key_bits);
        long double est = samples ? space * kc.valid_samples / samples : 0.0L;
        kc.count = est > (long double)UINT64_MAX ? UINT64_MAX : (uint64_t)(est + 0.5L);
        return kc;
    }

    if (key_bits > 24)
        throw Error(ErrorKind::Precondition, "exact mode handles at most 24 key bits");
    if (key_bits == 0)
        return {check_equivalence(kpc.netlist, oracle, solver).equivalent ? uint64_t{1}
                                                                          : uint64_t{0},
                true, 0, 0};

    // primary outputs the key can influence, and the inputs of their cones
    std::set<std::string> kept;
    for (const auto &[id, g] : kpc.netlist.gates())
        if (g.kind == GateKind::Lut && g.content_is_key)
            for (const auto &po : reachable_outputs(kpc.netlist, id))
                kept.insert(po);
    if (kept.empty())
        return {uint64_t{1} << key_bits, true, 0, 0};

    std::set<std::string> cone_pis;
    for (const auto &po : kept) {
        for (const auto &[gid, depth] : fanin_cone(kpc.netlist, po).depth)
            for (const auto &in : kpc.netlist.gate(gid).inputs)
                if (kpc.netlist.is_primary_input(in))
                    cone_pis.insert(in);
    }
    if (cone_pis.size() > 20)
        throw Error(ErrorKind::Precondition, "exact mode handles at most 20 cone inputs");

    std::vector<std::string> vary(cone_pis.begin(), cone_pis.end());
    Evaluator oracle_eval(oracle);
    std::map<std::string, int> oracle_pi_pos, oracle_po_pos;
    for (size_t i = 0; i < oracle.primary_inputs().size(); i++)
        oracle_pi_pos[oracle.primary_inputs()[i]] = (int)i;
    for (size_t i = 0; i < oracle.primary_outputs().size(); i++)
        oracle_po_pos.emplace(oracle.primary_outputs()[i], (int)i);

    Cnf cnf;
    CnfBuilder builder(cnf);
    cnf.key_vars.assign(1, {});
    for (uint64_t pat = 0; pat < (uint64_t{1} << vary.size()); pat++) {
        std::map<std::string, bool> pi_consts;
        for (const auto &pi : kpc.netlist.primary_inputs())
            pi_consts[pi] = false;
        for (size_t i = 0; i < vary.size(); i++)
            pi_consts[vary[i]] = (pat >> i) & 1;

        std::vector<uint8_t> oracle_in(oracle.primary_inputs().size(), 0);
        for (const auto &[pi, v] : pi_consts) {
            auto it = oracle_pi_pos.find(pi);
            if (it == oracle_pi_pos.end())
                throw Error(ErrorKind::Precondition, "oracle inputs differ from the KPC");
            oracle_in[it->second] = v ? 1 : 0;
        }
        std::vector<uint8_t> oracle_out = oracle_eval.run_po(oracle_in);

        auto nets = builder.encode(kpc.netlist, cnf.key_vars[0], pi_consts);
        for (const auto &po : kept) {
            auto it = oracle_po_pos.find(po);
            if (it == oracle_po_pos.end())
                throw Error(ErrorKind::Precondition, "oracle outputs differ from the KPC");
            if (!builder.force(nets.at(po), oracle_out[it->second] != 0))
                return {0, true, 0, 0};
        }
    }
    return {enumerate_keys(kpc, cnf, solver), true, 0, 0};
}

// ---------------------------------------------------------------------------
// serialization

std::string attack_result_text(const AttackResult &r)
{
    std::ostringstream out;
    out << "iterations = " << r.iterations << "\n";
    out << "solver_calls = " << r.solver_calls << "\n";
    out << "seconds = " << r.solver_seconds << "\n";
    out << "verified = " << (r.verified ? "true" : "false") << "\n";
    out << "key_bits = " << r.recovered_key.size() << "\n";
    out << "timed_out = " << (r.timed_out ? "true" : "false") << "\n";
    for (const auto &[name, bit] : r.recovered_key)
        out << "key " << name << " = " << (bit ? 1 : 0) << "\n";
    return out.str();
}

std::string attack_result_json(const AttackResult &r, const std::string &benchmark,
                               const std::string &note)
{
    nlohmann::json j;
    j["benchmark"] = benchmark;
    j["iterations"] = r.iterations;
    j["solver_calls"] = r.solver_calls;
    j["seconds"] = r.solver_seconds;
    j["verified"] = r.verified;
    j["key_bits"] = r.recovered_key.size();
    j["timed_out"] = r.timed_out;
    nlohmann::json key = nlohmann::json::object();
    for (const auto &[name, bit] : r.recovered_key)
        key[name] = bit ? 1 : 0;
    j["key"] = key;
    if (!note.empty())
        j["note"] = note;
    return j.dump(2) + "\n";
}

} // namespace lutlock
