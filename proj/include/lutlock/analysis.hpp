#pragma once

#include "lutlock/netlist.hpp"

#include <map>
#include <string>

namespace lutlock {

struct AnalysisConfig {
    double pi_p1 = 0.5; // probability of logic 1 at every primary input
    int lut_delay = 2;  // unit-delay cost of a LUT cell; plain gates cost 1
};

/// net -> probability of logic 1.
using ProbMap = std::map<std::string, double>;

/// Topological probability propagation assuming independent gate inputs.
/// Key-flagged LUTs are evaluated with their stored (correct-key) content.
ProbMap signal_probabilities(const Netlist &n, double pi_p1 = 0.5);

/// Signal probability skew |Pr(0) - Pr(1)| = |1 - 2 p1| of a net.
double sps(const ProbMap &p, const std::string &net);

struct TimingInfo {
    std::map<std::string, int> arrival;
    std::map<std::string, int> required;
    std::map<std::string, int> slack; // required - arrival
    int critical_path_delay = 0;
    int lut_delay = 2;

    int gate_delay(GateKind kind) const { return kind == GateKind::Lut ? lut_delay : 1; }
    int arrival_of(const std::string &net) const { return arrival.at(net); }
    int required_of(const std::string &net) const { return required.at(net); }
    int slack_of(const std::string &net) const { return slack.at(net); }
};

/// Unit-delay static timing: arrival(PI)=0, gate adds gate_delay(kind);
/// required seeds every primary output with the critical path delay.
TimingInfo timing(const Netlist &n, int lut_delay = 2);

/// Total positive slack over the fan-in cone of a primary output
/// (per-gate surrogate: sum of max(0, slack) over cone gates).
int tps_of_output(const Netlist &n, const TimingInfo &t, const std::string &po);

/// Longest source-to-sink path through gate `id` if it were replaced by a LUT
/// now, against the timing of the current netlist.
int delay_estimate_after_replacement(const Netlist &n, const TimingInfo &t,
                                     const std::string &id);

} // namespace lutlock
