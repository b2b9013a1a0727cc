#include "lutlock/benchgen.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace lutlock {

std::optional<GenProfile> named_profile(const std::string &name)
{
    // published PI/PO/gate counts of the c-series circuits
    struct Row {
        const char *name;
        int pi, po, gates, window;
        uint64_t seed;
    };
    static const Row rows[] = {
        {"c17", 5, 2, 6, 4, 0x17},       {"c432", 36, 7, 160, 14, 0x432},
        {"c499", 41, 32, 202, 24, 0x499}, {"c880", 60, 26, 383, 18, 0x880},
        {"c1355", 41, 32, 546, 26, 0x1355}, {"c1908", 33, 25, 880, 30, 0x1908},
        {"c2670", 233, 140, 1193, 30, 0x2670}, {"c3540", 50, 22, 1669, 40, 0x3540},
        {"c5315", 178, 123, 2307, 40, 0x5315}, {"c6288", 32, 32, 2416, 24, 0x6288},
        {"c7552", 207, 108, 3512, 44, 0x7552},
    };
    for (const Row &r : rows) {
        if (name == r.name) {
            GenProfile p;
            p.name = r.name;
            p.n_pi = r.pi;
            p.n_po = r.po;
            p.n_gates = r.gates;
            p.locality_window = r.window;
            p.seed = r.seed;
            return p;
        }
    }
    return std::nullopt;
}

namespace {

std::string padded(const std::string &prefix, int i, int width)
{
    std::string num = std::to_string(i);
    return prefix + std::string(width > (int)num.size() ? width - num.size() : 0, '0') + num;
}

} // namespace

Netlist generate_circuit(const GenProfile &profile)
{
    if (profile.n_pi < 2 || profile.n_gates < 1 || profile.n_po < 1)
        throw Error(ErrorKind::Precondition, "profile too small");

    std::mt19937_64 rng(profile.seed);
    int name_width = (int)std::to_string(std::max(profile.n_gates, profile.n_pi)).size();

    std::vector<std::string> pis;
    for (int i = 1; i <= profile.n_pi; i++)
        pis.push_back(padded("pi", i, name_width));

    std::vector<std::string> nets(pis); // creation order: PIs then gates
    std::vector<Gate> gates;

    auto pick_net = [&]() -> const std::string & {
        size_t n = nets.size();
        size_t w = std::min<size_t>(profile.locality_window, n);
        if ((int)(rng() % 100) < profile.locality_percent)
            return nets[n - 1 - rng() % w];
        return nets[rng() % n];
    };

    for (int i = 1; i <= profile.n_gates; i++) {
        Gate g;
        g.id = padded("n", i, name_width);
        int k = (int)(rng() % 100);
        if (k < 28)
            g.kind = GateKind::Nand;
        else if (k < 42)
            g.kind = GateKind::Nor;
        else if (k < 58)
            g.kind = GateKind::And;
        else if (k < 70)
            g.kind = GateKind::Or;
        else if (k < 78)
            g.kind = GateKind::Not;
        else if (k < 82)
            g.kind = GateKind::Buff;
        else if (k < 94)
            g.kind = GateKind::Xor;
        else
            g.kind = GateKind::Xnor;

        size_t arity = 1;
        if (g.kind != GateKind::Not && g.kind != GateKind::Buff) {
            int a = (int)(rng() % 100);
            arity = a < 72 ? 2 : a < 90 ? 3 : a < 97 ? 4 : 5;
            arity = std::min(arity, nets.size());
            if (arity < 2)
                arity = 2;
        }
        std::set<std::string> chosen;
        int guard = 0;
        while (chosen.size() < arity && guard++ < 1000)
            chosen.insert(pick_net());
        if (chosen.size() < 2 && arity >= 2)
            for (const auto &net : nets) {
                if (chosen.size() >= arity)
                    break;
                chosen.insert(net);
            }
        g.inputs.assign(chosen.begin(), chosen.end());
        gates.push_back(g);
        nets.push_back(g.id);
    }

    // consumption map, then choose outputs among unconsumed nets (latest first)
    std::set<std::string> consumed;
    for (const auto &g : gates)
        for (const auto &in : g.inputs)
            consumed.insert(in);

    std::vector<std::string> unconsumed;
    for (auto it = nets.rbegin(); it != nets.rend(); ++it)
        if (!consumed.count(*it))
            unconsumed.push_back(*it);

    std::vector<std::string> pos;
    std::set<std::string> po_set;
    for (const auto &net : unconsumed) {
        if ((int)pos.size() >= profile.n_po)
            break;
        pos.push_back(net);
        po_set.insert(net);
    }

    // remaining unconsumed nets get appended as inputs of later associative
    // gates so that every gate reaches an output
    std::map<std::string, size_t> gate_pos;
    for (size_t i = 0; i < gates.size(); i++)
        gate_pos[gates[i].id] = i;
    auto later_index = [&](const std::string &net) -> size_t {
        auto it = gate_pos.find(net);
        return it == gate_pos.end() ? 0 : it->second + 1;
    };
    for (const auto &net : unconsumed) {
        if (po_set.count(net))
            continue;
        bool attached = false;
        size_t from = later_index(net);
        for (size_t j = from; j < gates.size() && !attached; j++) {
            Gate &g = gates[j];
            bool assoc = g.kind == GateKind::And || g.kind == GateKind::Or ||
                         g.kind == GateKind::Nand || g.kind == GateKind::Nor;
            if (assoc && g.inputs.size() < 5 &&
                std::find(g.inputs.begin(), g.inputs.end(), net) == g.inputs.end()) {
                g.inputs.push_back(net);
                attached = true;
            }
        }
        if (!attached) { // tail net with no room downstream: expose it
            pos.push_back(net);
            po_set.insert(net);
        }
    }

    // top up the output count from the latest nets if needed
    for (auto it = nets.rbegin(); it != nets.rend() && (int)pos.size() < profile.n_po; ++it)
        if (!po_set.count(*it)) {
            pos.push_back(*it);
            po_set.insert(*it);
        }

    std::sort(pos.begin(), pos.end());
    return Netlist(profile.name, pis, pos, std::move(gates));
}

} // namespace lutlock
