#include "lutlock/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lutlock {

namespace {

double xor_fold(const std::vector<double> &ps)
{
    double acc = ps.at(0);
    for (size_t i = 1; i < ps.size(); i++)
        acc = acc * (1.0 - ps[i]) + ps[i] * (1.0 - acc);
    return acc;
}

double lut_probability(const Gate &g, const std::vector<double> &in_p)
{
    double p = 0.0;
    size_t patterns = g.lut_content.size();
    size_t arity = g.arity();
    for (size_t pat = 0; pat < patterns; pat++) {
        if (!g.lut_content[pat])
            continue;
        double w = 1.0;
        for (size_t j = 0; j < arity; j++) {
            bool bit = (pat >> (arity - 1 - j)) & 1; // first input is the MSB
            w *= bit ? in_p[j] : 1.0 - in_p[j];
        }
        p += w;
    }
    return p;
}

} // namespace

ProbMap signal_probabilities(const Netlist &n, double pi_p1)
{
    ProbMap p;
    for (const auto &pi : n.primary_inputs())
        p[pi] = pi_p1;
    for (const auto &id : n.topo_order()) {
        const Gate &g = n.gate(id);
        std::vector<double> in_p;
        in_p.reserve(g.inputs.size());
        for (const auto &in : g.inputs)
            in_p.push_back(p.at(in));
        double v = 0.0;
        switch (g.kind) {
        case GateKind::And:
        case GateKind::Nand: {
            double prod = 1.0;
            for (double q : in_p)
                prod *= q;
            v = g.kind == GateKind::And ? prod : 1.0 - prod;
            break;
        }
        case GateKind::Or:
        case GateKind::Nor: {
            double prod = 1.0;
            for (double q : in_p)
                prod *= 1.0 - q;
            v = g.kind == GateKind::Or ? 1.0 - prod : prod;
            break;
        }
        case GateKind::Xor:
            v = xor_fold(in_p);
            break;
        case GateKind::Xnor:
            v = 1.0 - xor_fold(in_p);
            break;
        case GateKind::Not:
            v = 1.0 - in_p[0];
            break;
        case GateKind::Buff:
            v = in_p[0];
            break;
        case GateKind::Lut:
            v = lut_probability(g, in_p);
            break;
        }
        p[id] = std::clamp(v, 0.0, 1.0);
    }
    return p;
}

double sps(const ProbMap &p, const std::string &net)
{
    auto it = p.find(net);
    if (it == p.end())
        throw Error(ErrorKind::UnknownNet, "no probability for net '" + net + "'");
    return std::abs(1.0 - 2.0 * it->second);
}

TimingInfo timing(const Netlist &n, int lut_delay)
{
    TimingInfo t;
    t.lut_delay = lut_delay;
    for (const auto &pi : n.primary_inputs())
        t.arrival[pi] = 0;
    for (const auto &id : n.topo_order()) {
        const Gate &g = n.gate(id);
        int a = 0;
        for (const auto &in : g.inputs)
            a = std::max(a, t.arrival.at(in));
        t.arrival[id] = a + t.gate_delay(g.kind);
    }
    t.critical_path_delay = 0;
    for (const auto &po : n.primary_outputs())
        t.critical_path_delay = std::max(t.critical_path_delay, t.arrival.at(po));

    // required times propagate backward: min over consumers, POs seeded at the
    // critical path; consumerless non-PO nets default to the critical path.
    auto required_of = [&](const std::string &net) {
        int r = std::numeric_limits<int>::max();
        if (n.po_slots(net) > 0)
            r = t.critical_path_delay;
        for (const auto &c : n.consumers(net)) {
            const Gate &cons = n.gate(c);
            r = std::min(r, t.required.at(c) - t.gate_delay(cons.kind));
        }
        if (r == std::numeric_limits<int>::max())
            r = t.critical_path_delay;
        return r;
    };
    const auto &order = n.topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        t.required[*it] = required_of(*it);
    for (const auto &pi : n.primary_inputs())
        t.required[pi] = required_of(pi);
    for (const auto &[net, a] : t.arrival)
        t.slack[net] = t.required.at(net) - a;
    return t;
}

int tps_of_output(const Netlist &n, const TimingInfo &t, const std::string &po)
{
    bool is_po = std::find(n.primary_outputs().begin(), n.primary_outputs().end(), po) !=
                 n.primary_outputs().end();
    if (!is_po)
        throw Error(ErrorKind::UnknownNet, "'" + po + "' is not a primary output");
    int sum = 0;
    for (const auto &[id, depth] : fanin_cone(n, po).depth)
        sum += std::max(0, t.slack.at(id));
    return sum;
}

int delay_estimate_after_replacement(const Netlist &n, const TimingInfo &t,
                                     const std::string &id)
{
    const Gate &g = n.gate(id);
    if (g.kind == GateKind::Lut)
        throw Error(ErrorKind::AlreadyLut, "gate '" + id + "' is already a LUT");
    int downstream = t.critical_path_delay - t.required.at(id);
    return t.arrival.at(id) + (t.lut_delay - t.gate_delay(g.kind)) + downstream;
}

} // namespace lutlock
