#include "lutlock/locker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

namespace lutlock {

const char *to_string(PolicyKind kind)
{
    switch (kind) {
    case PolicyKind::Rnd: return "RND";
    case PolicyKind::Fic: return "FIC";
    case PolicyKind::Hsc: return "HSC";
    case PolicyKind::MfoHsc: return "MFO_HSC";
    case PolicyKind::MoHsc: return "MO_HSC";
    case PolicyKind::Nb2MoHsc: return "NB2_MO_HSC";
    }
    return "?";
}

std::optional<PolicyKind> policy_from_string(const std::string &name)
{
    std::string u;
    for (char c : name)
        u += c == '-' ? '_' : (char)std::toupper((unsigned char)c);
    if (u == "RND") return PolicyKind::Rnd;
    if (u == "FIC") return PolicyKind::Fic;
    if (u == "HSC") return PolicyKind::Hsc;
    if (u == "MFO_HSC") return PolicyKind::MfoHsc;
    if (u == "MO_HSC") return PolicyKind::MoHsc;
    if (u == "NB2_MO_HSC") return PolicyKind::Nb2MoHsc;
    return std::nullopt;
}

const char *to_string(RejectReason r)
{
    switch (r) {
    case RejectReason::Timing: return "timing";
    case RejectReason::Oversized: return "oversized";
    case RejectReason::AlreadyLut: return "already_lut";
    }
    return "?";
}

// ---------------------------------------------------------------------------

std::string select_output(const Netlist &n, const TimingInfo &t,
                          const std::set<std::string> &forbidden, double alpha, double beta)
{
    double max_tps = 0.0, max_cone = 0.0;
    std::map<std::string, std::pair<double, double>> scores; // po -> (tps, cone size)
    for (const auto &po : n.primary_outputs()) {
        double tps = (double)tps_of_output(n, t, po);
        double cone = (double)fanin_cone(n, po).size();
        scores[po] = {tps, cone};
        max_tps = std::max(max_tps, tps);
        max_cone = std::max(max_cone, cone);
    }
    std::string best;
    double best_w = -1.0;
    for (const auto &po : n.primary_outputs()) {
        if (forbidden.count(po))
            continue;
        auto [tps, cone] = scores.at(po);
        double w = alpha * (max_tps > 0 ? tps / max_tps : 0.0) +
                   beta * (max_cone > 0 ? cone / max_cone : 0.0);
        if (w > best_w + 1e-12 || (std::abs(w - best_w) <= 1e-12 && po < best)) {
            best = po;
            best_w = w;
        }
    }
    if (best.empty())
        throw Error(ErrorKind::Precondition, "all primary outputs are forbidden");
    return best;
}

std::vector<std::string> rank_candidates(const Policy &policy, const Netlist &,
                                         const std::vector<std::string> &candidates,
                                         const std::map<std::string, CandidateMetrics> &metrics)
{
    std::vector<std::string> out(candidates);
    if (policy.kind == PolicyKind::Rnd) {
        // Fisher-Yates on the id-sorted list; fully deterministic per seed
        std::sort(out.begin(), out.end());
        std::mt19937_64 rng(policy.seed);
        for (size_t i = out.size(); i > 1; i--)
            std::swap(out[i - 1], out[rng() % i]);
        return out;
    }
    auto key_less = [&](const std::string &a, const std::string &b) {
        const CandidateMetrics &ma = metrics.at(a);
        const CandidateMetrics &mb = metrics.at(b);
        switch (policy.kind) {
        case PolicyKind::Fic:
            if (ma.bfs_depth != mb.bfs_depth)
                return ma.bfs_depth < mb.bfs_depth;
            break;
        case PolicyKind::Hsc:
            if (ma.sps != mb.sps)
                return ma.sps > mb.sps;
            break;
        case PolicyKind::MfoHsc:
            if (ma.fanout != mb.fanout)
                return ma.fanout < mb.fanout;
            if (ma.sps != mb.sps)
                return ma.sps > mb.sps;
            break;
        case PolicyKind::MoHsc:
        case PolicyKind::Nb2MoHsc:
            if (ma.reachable_outputs != mb.reachable_outputs)
                return ma.reachable_outputs < mb.reachable_outputs;
            if (ma.sps != mb.sps)
                return ma.sps > mb.sps;
            break;
        case PolicyKind::Rnd:
            break;
        }
        return a < b;
    };
    std::sort(out.begin(), out.end(), key_less);
    return out;
}

Replacement replace_with_lut(const Netlist &n, const std::string &gate_id)
{
    const Gate &g = n.gate(gate_id);
    if (g.kind == GateKind::Lut)
        throw Error(ErrorKind::AlreadyLut, "gate '" + gate_id + "' is already a LUT");

    size_t arity = g.arity();
    Gate lut;
    lut.id = g.id;
    lut.kind = GateKind::Lut;
    lut.inputs = g.inputs;
    lut.content_is_key = true;
    lut.lut_content.resize(size_t{1} << arity);

    Replacement r{Netlist{}, {}, {}};
    for (size_t pat = 0; pat < lut.lut_content.size(); pat++) {
        std::vector<uint8_t> bits(arity);
        for (size_t j = 0; j < arity; j++)
            bits[j] = (pat >> (arity - 1 - j)) & 1; // first input is the MSB
        lut.lut_content[pat] = eval_gate(g.kind, bits) ? 1 : 0;
        r.key_bits.push_back(key_bit_name(g.id, pat));
        r.correct_values.push_back(lut.lut_content[pat]);
    }
    r.netlist = n.with_gate_replaced(std::move(lut));
    return r;
}

// ---------------------------------------------------------------------------
// obfuscate

namespace {

struct StaticMetrics {
    std::map<std::string, int> reach;
    std::map<std::string, int> fanout;
    ProbMap probs;
};

StaticMetrics compute_static_metrics(const Netlist &n, double pi_p1)
{
    StaticMetrics m;
    m.probs = signal_probabilities(n, pi_p1);

    // reachable-output counts by reverse-topological bitset union
    size_t words = (n.primary_outputs().size() + 63) / 64;
    std::map<std::string, size_t> po_bit;
    for (size_t i = 0; i < n.primary_outputs().size(); i++)
        po_bit.emplace(n.primary_outputs()[i], i); // duplicates keep first bit
    std::map<std::string, std::vector<uint64_t>> sets;
    const auto &order = n.topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        std::vector<uint64_t> s(words, 0);
        if (auto pb = po_bit.find(*it); pb != po_bit.end())
            s[pb->second / 64] |= uint64_t{1} << (pb->second % 64);
        for (const auto &c : n.consumers(*it)) {
            const auto &cs = sets.at(c);
            for (size_t w = 0; w < words; w++)
                s[w] |= cs[w];
        }
        int count = 0;
        for (uint64_t w : s)
            count += __builtin_popcountll(w);
        m.reach[*it] = count;
        sets.emplace(*it, std::move(s));
        m.fanout[*it] = fanout_count(n, *it);
    }
    return m;
}

class Obfuscator {
  public:
    Obfuscator(const Netlist &n, const Policy &policy, int target, const LockerConfig &cfg)
        : original_(n), policy_(policy), target_(target), cfg_(cfg), current_(n)
    {
        if (target < 1)
            throw Error(ErrorKind::Precondition, "target gate count must be >= 1");
        if (n.gates().empty())
            throw Error(ErrorKind::Precondition, "empty netlist");
    }

    ObfuscationResult run()
    {
        statics_ = compute_static_metrics(original_, cfg_.pi_p1);
        orig_timing_ = timing(original_, cfg_.lut_delay);
        cur_timing_ = orig_timing_;
        stats_.requested = target_;

        if (policy_.kind == PolicyKind::Rnd)
            run_rnd();
        else
            run_cone_policies();

        stats_.achieved = (int)(trace_.steps.size());
        return ObfuscationResult{std::move(current_), std::move(key_), std::move(trace_),
                                 stats_};
    }

  private:
    bool replaceable_kind(const std::string &id) const
    {
        const Gate &g = current_.gate(id);
        return g.kind != GateKind::Lut && g.arity() <= cfg_.max_lut_inputs;
    }

    bool timing_ok(const std::string &id) const
    {
        int est = delay_estimate_after_replacement(current_, cur_timing_, id);
        return (double)est <= (1.0 + policy_.gamma) * orig_timing_.critical_path_delay + 1e-9;
    }

    CandidateMetrics metrics_for(const std::string &id, const FaninCone *cone) const
    {
        CandidateMetrics m;
        m.reachable_outputs = statics_.reach.at(id);
        m.fanout = statics_.fanout.at(id);
        m.sps = std::abs(1.0 - 2.0 * statics_.probs.at(id));
        m.bfs_depth = cone && cone->contains(id) ? cone->depth.at(id) : 0;
        return m;
    }

    void apply_replacement(const std::string &id, const std::string &output,
                           std::vector<CandidateSnapshot> snapshot,
                           std::vector<Rejection> rejections)
    {
        Replacement r = replace_with_lut(current_, id);
        current_ = std::move(r.netlist);
        cur_timing_ = timing(current_, cfg_.lut_delay);
        for (size_t i = 0; i < r.key_bits.size(); i++)
            key_[r.key_bits[i]] = r.correct_values[i] != 0;
        SelectionStep step;
        step.step = (int)trace_.steps.size() + 1;
        step.chosen = id;
        step.output = output;
        step.candidates = std::move(snapshot);
        step.rejections = std::move(rejections);
        trace_.steps.push_back(std::move(step));
        replaced_.insert(id);
    }

    void run_rnd()
    {
        std::vector<std::string> pool;
        for (const auto &[id, g] : current_.gates())
            if (g.kind != GateKind::Lut && g.arity() <= cfg_.max_lut_inputs)
                pool.push_back(id);
        std::map<std::string, CandidateMetrics> metrics;
        for (const auto &id : pool)
            metrics[id] = metrics_for(id, nullptr);
        std::vector<std::string> ranked = rank_candidates(policy_, current_, pool, metrics);

        std::vector<Rejection> pending_rejections;
        for (size_t i = 0; i < ranked.size() && (int)trace_.steps.size() < target_; i++) {
            const std::string &id = ranked[i];
            if (!timing_ok(id)) {
                stats_.timing_rejections++;
                pending_rejections.push_back({id, RejectReason::Timing});
                continue;
            }
            std::vector<CandidateSnapshot> snapshot;
            for (size_t j = i; j < ranked.size(); j++)
                snapshot.push_back({ranked[j], metrics.at(ranked[j])});
            apply_replacement(id, "", std::move(snapshot), std::move(pending_rejections));
            pending_rejections.clear();
        }
    }

    void run_cone_policies()
    {
        std::set<std::string> forbidden_outputs;
        std::set<std::string> nb2_forbidden;
        std::vector<std::string> candidates;
        std::set<std::string> in_list;
        std::string output;
        FaninCone cone;
        std::vector<Rejection> pending_rejections;

        auto remove_candidate = [&](const std::string &id) {
            in_list.erase(id);
            candidates.erase(std::remove(candidates.begin(), candidates.end(), id),
                             candidates.end());
        };
        auto try_add_candidate = [&](const std::string &id) {
            if (current_.is_primary_input(id))
                return; // primary inputs are silently skipped
            if (!current_.find_gate(id))
                return;
            if (replaced_.count(id) || in_list.count(id) || nb2_forbidden.count(id))
                return;
            candidates.push_back(id);
            in_list.insert(id);
        };

        while ((int)trace_.steps.size() < target_) {
            if (candidates.empty()) {
                if (!output.empty()) {
                    forbidden_outputs.insert(output);
                    stats_.cone_switches++;
                }
                if (forbidden_outputs.size() >= current_.primary_outputs().size())
                    break; // every cone exhausted
                try {
                    output = select_output(current_, cur_timing_, forbidden_outputs,
                                           policy_.alpha, policy_.beta);
                } catch (const Error &) {
                    break;
                }
                cone = fanin_cone(current_, output);
                const Gate *driver = current_.find_gate(output);
                if (driver == nullptr)
                    continue; // PI-driven output: nothing to replace, forbid on next pass
                try_add_candidate(driver->id);
                continue;
            }

            std::map<std::string, CandidateMetrics> metrics;
            for (const auto &id : candidates)
                metrics[id] = metrics_for(id, &cone);
            std::vector<std::string> ranked =
                rank_candidates(policy_, current_, candidates, metrics);
            std::string top = ranked[0];
            remove_candidate(top);

            if (!replaceable_kind(top)) {
                RejectReason r = current_.gate(top).kind == GateKind::Lut
                                     ? RejectReason::AlreadyLut
                                     : RejectReason::Oversized;
                pending_rejections.push_back({top, r});
                continue;
            }
            if (!timing_ok(top)) {
                stats_.timing_rejections++;
                pending_rejections.push_back({top, RejectReason::Timing});
                continue;
            }

            std::vector<CandidateSnapshot> snapshot;
            for (const auto &id : ranked)
                snapshot.push_back({id, metrics.at(id)});
            apply_replacement(top, output, std::move(snapshot), std::move(pending_rejections));
            pending_rejections.clear();

            const Gate &g = current_.gate(top);
            if (policy_.kind == PolicyKind::Nb2MoHsc) {
                // forbid gates adjacent to the replacement in both directions,
                // then seed the search with the fan-ins one level further down
                for (const auto &in : g.inputs) {
                    if (const Gate *fi = current_.find_gate(in)) {
                        nb2_forbidden.insert(fi->id);
                        remove_candidate(fi->id);
                        for (const auto &grand : fi->inputs)
                            try_add_candidate(grand);
                    }
                }
                for (const auto &cons : current_.consumers(top)) {
                    nb2_forbidden.insert(cons);
                    remove_candidate(cons);
                }
            } else {
                for (const auto &in : g.inputs)
                    try_add_candidate(in);
            }
        }
    }

    const Netlist &original_;
    Policy policy_;
    int target_;
    LockerConfig cfg_;

    Netlist current_;
    TimingInfo orig_timing_;
    TimingInfo cur_timing_;
    StaticMetrics statics_;
    Assignment key_;
    SelectionTrace trace_;
    ObfuscationStats stats_;
    std::set<std::string> replaced_;
};

} // namespace

ObfuscationResult obfuscate(const Netlist &n, const Policy &policy, int target_n,
                            const LockerConfig &config)
{
    return Obfuscator(n, policy, target_n, config).run();
}

// ---------------------------------------------------------------------------
// key and trace files

std::string write_key_file(const Assignment &key)
{
    std::ostringstream out;
    for (const auto &[name, bit] : key)
        out << name << " = " << (bit ? 1 : 0) << "\n";
    return out.str();
}

Assignment parse_key_file(const std::string &text)
{
    Assignment key;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        line_no++;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream ls(line);
        std::string name, eq, value;
        if (!(ls >> name))
            continue;
        if (!(ls >> eq >> value) || eq != "=" || (value != "0" && value != "1"))
            throw Error(ErrorKind::Syntax, "bad key line", line_no);
        key[name] = value == "1";
    }
    return key;
}

std::string write_trace_file(const SelectionTrace &trace)
{
    std::ostringstream out;
    for (const auto &s : trace.steps) {
        out << "step=" << s.step << " chosen=" << s.chosen << " output="
            << (s.output.empty() ? "-" : s.output) << "\n";
        for (const auto &r : s.rejections)
            out << "rej=" << r.gate << " reason=" << to_string(r.reason) << "\n";
        for (const auto &c : s.candidates)
            out << "cand=" << c.gate << " reach=" << c.metrics.reachable_outputs
                << " fanout=" << c.metrics.fanout << " sps=" << c.metrics.sps
                << " depth=" << c.metrics.bfs_depth << "\n";
    }
    return out.str();
}

} // namespace lutlock
