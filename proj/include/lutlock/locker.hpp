#pragma once

#include "lutlock/analysis.hpp"
#include "lutlock/netlist.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lutlock {

enum class PolicyKind { Rnd, Fic, Hsc, MfoHsc, MoHsc, Nb2MoHsc };

const char *to_string(PolicyKind kind);
std::optional<PolicyKind> policy_from_string(const std::string &name);

struct Policy {
    PolicyKind kind = PolicyKind::Nb2MoHsc;
    double alpha = 0.5;  // output selection: total-positive-slack weight
    double beta = 0.5;   // output selection: cone-size weight
    double gamma = 0.1;  // feasible delay overhead fraction
    uint64_t seed = 1;   // RND shuffle seed
};

struct CandidateMetrics {
    int reachable_outputs = 0;
    int fanout = 0;
    double sps = 0.0;
    int bfs_depth = 0;
};

struct CandidateSnapshot {
    std::string gate;
    CandidateMetrics metrics;
};

enum class RejectReason { Timing, Oversized, AlreadyLut };

const char *to_string(RejectReason r);

struct Rejection {
    std::string gate;
    RejectReason reason;
};

struct SelectionStep {
    int step = 0;                              // 1-based replacement index
    std::string chosen;
    std::string output;                        // selected primary output
    std::vector<CandidateSnapshot> candidates; // ranked list at decision time
    std::vector<Rejection> rejections;         // rejected since previous step
};

struct SelectionTrace {
    std::vector<SelectionStep> steps;
};

struct ObfuscationStats {
    int requested = 0;
    int achieved = 0;
    int timing_rejections = 0;
    int cone_switches = 0;
};

struct ObfuscationResult {
    Netlist obfuscated;
    Assignment correct_key;
    SelectionTrace trace;
    ObfuscationStats stats;
};

struct LockerConfig {
    double pi_p1 = 0.5;
    int lut_delay = 2;
    size_t max_lut_inputs = 6;
};

/// Weighted output choice: argmax of alpha*TPS* + beta*FIC* over non-forbidden
/// primary outputs, normalization maxima taken over all outputs. Ties break by
/// ascending identifier.
std::string select_output(const Netlist &n, const TimingInfo &t,
                          const std::set<std::string> &forbidden, double alpha, double beta);

/// Order candidates by the policy's priority key; final tie by identifier.
std::vector<std::string> rank_candidates(const Policy &policy, const Netlist &n,
                                         const std::vector<std::string> &candidates,
                                         const std::map<std::string, CandidateMetrics> &metrics);

/// Turn a plain gate into a key-programmable LUT preserving its function.
struct Replacement {
    Netlist netlist;
    std::vector<std::string> key_bits;
    std::vector<uint8_t> correct_values;
};
Replacement replace_with_lut(const Netlist &n, const std::string &gate_id);

/// Run the LUT-replacement flow for any policy until `target_n` gates are
/// replaced or every cone is exhausted.
ObfuscationResult obfuscate(const Netlist &n, const Policy &policy, int target_n,
                            const LockerConfig &config = {});

/// Key file: one "k_<gate>_<i> = 0|1" line per bit, sorted by name.
std::string write_key_file(const Assignment &key);
Assignment parse_key_file(const std::string &text);

/// Trace file: one line per step with stable field order, plus rejections.
std::string write_trace_file(const SelectionTrace &trace);

} // namespace lutlock
