#pragma once

#include "lutlock/cnf.hpp"
#include "lutlock/netlist.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lutlock {

/// The attacker's view: key LUT contents are unknown, exposed as named key
/// inputs; the correct key is withheld.
struct Kpc {
    Netlist netlist;                     // key LUTs have content_is_key set, content zeroed
    std::vector<std::string> key_inputs; // id-sorted gates, bit index ascending
};

/// Strip the concrete content of every key-flagged LUT.
Kpc to_kpc(const Netlist &obfuscated);

/// Flag every LUT as key-programmable (attacker cannot read LUT internals;
/// used when the netlist came from a file, which carries no key flag).
Netlist mark_all_luts_key(const Netlist &n);

/// Resolve key-flagged LUT contents from a key assignment.
Netlist apply_key(const Netlist &n, const Assignment &key);

struct DipRecord {
    Assignment pi;
    Assignment po; // oracle outputs for pi
};

struct AttackLimits {
    double time_limit_seconds = 600.0;
    uint64_t max_iterations = 0; // 0 = unlimited
};

struct AttackResult {
    Assignment recovered_key;
    std::vector<DipRecord> dips;
    uint64_t iterations = 0;
    uint64_t solver_calls = 0;
    double solver_seconds = 0.0;
    bool verified = false;
    bool timed_out = false;
};

struct SolverConfig {
    std::string command;   // empty = in-process CDCL, otherwise DIMACS subprocess
    uint64_t seed = 0;     // decision randomization of the in-process engine
};

/// Oracle query: primary-input bits (netlist order) to primary-output bits.
using OracleFn = std::function<std::vector<uint8_t>(const std::vector<uint8_t> &)>;

/// Functional-circuit oracle backed by simulation of `original`, with inputs
/// and outputs remapped to `pi_order` / `po_order` names.
OracleFn make_oracle(const Netlist &original, const std::vector<std::string> &pi_order,
                     const std::vector<std::string> &po_order);

/// Iterative discriminating-input attack: find an input and two keys that
/// disagree, query the oracle, constrain both keys to reproduce it, repeat
/// until no discriminating input remains, then extract and verify the key.
AttackResult sat_attack(const Kpc &kpc, const Netlist &oracle, const AttackLimits &limits = {},
                        const SolverConfig &solver = {});

struct EquivalenceResult {
    bool equivalent = false;
    Assignment witness; // a primary-input assignment exposing the difference
};

/// Combinational equivalence over identical PI/PO name sets; exhaustive
/// simulation up to 12 inputs, CNF miter beyond.
EquivalenceResult check_equivalence(const Netlist &a, const Netlist &b,
                                    const SolverConfig &solver = {});

enum class CountMode { Exact, Sample };

struct KeyCount {
    uint64_t count = 0;    // exact count, or the scaled estimate
    bool exact = true;
    uint64_t samples = 0;  // sample mode: keys tried
    uint64_t valid_samples = 0;
};

/// Number of keys under which the KPC matches the oracle on every input.
/// Exact mode enumerates models with blocking clauses over the constraint
/// "match the oracle on all patterns of the key-affected cone's inputs"
/// (preconditions: <= 24 key bits, <= 20 cone inputs). Sample mode estimates
/// by equivalence-checking uniformly random keys.
KeyCount count_valid_keys(const Kpc &kpc, const Netlist &oracle, CountMode mode,
                          uint64_t samples = 1000, uint64_t seed = 1,
                          const SolverConfig &solver = {});

/// Number of keys consistent with a set of input/output observations
/// (exact, blocking-clause enumeration; test and audit helper).
uint64_t count_keys_consistent_with(const Kpc &kpc, const std::vector<DipRecord> &dips,
                                    const SolverConfig &solver = {});

/// Serialization of attack results: line-oriented text and JSON.
std::string attack_result_text(const AttackResult &r);
std::string attack_result_json(const AttackResult &r, const std::string &benchmark,
                               const std::string &note = "");

} // namespace lutlock
