#pragma once

#include "lutlock/netlist.hpp"
#include "lutlock/solver.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace lutlock {

/// Encoded value of a net: either a constant (after folding) or a literal.
struct Sig {
    bool is_const = false;
    bool cval = false;
    Lit lit = -1;

    static Sig constant(bool v) { return {true, v, -1}; }
    static Sig of(Lit l) { return {false, false, l}; }
    Sig negated() const { return is_const ? constant(!cval) : of(neg_lit(lit)); }
};

/// Clause database plus the variable maps produced by the encoders.
/// Copy 0/1 share primary-input variables; key and internal variables are per
/// copy. Nets may be aliased to other literals or folded to constants.
struct Cnf {
    int num_vars = 0;
    std::vector<std::vector<Lit>> clauses;

    std::map<std::string, int> pi_vars;              // shared across copies
    std::vector<std::map<std::string, Sig>> nets;    // per copy: net -> signal
    std::vector<std::map<std::string, int>> key_vars; // per copy: key bit -> var
    std::vector<int> diff_vars;                      // miter difference variables

    int new_var() { return num_vars++; }
    void add(std::vector<Lit> c) { clauses.push_back(std::move(c)); }
};

/// Gate-consistency encoder. Aliases buffers/inverters, folds constants when
/// primary inputs are fixed, and encodes key-flagged LUT content bits as
/// named key variables.
class CnfBuilder {
  public:
    explicit CnfBuilder(Cnf &cnf) : cnf_(cnf) {}

    /// Encode one copy of `n`. PIs listed in `pi_consts` become constants;
    /// all others get shared variables from cnf.pi_vars (allocated on demand).
    /// Key bits resolve through `key_vars` (allocated on demand).
    std::map<std::string, Sig> encode(const Netlist &n, std::map<std::string, int> &key_vars,
                                      const std::map<std::string, bool> &pi_consts = {});

    /// Tseitin XOR of two signals (fresh variable unless foldable).
    Sig make_xor(Sig a, Sig b);

    /// Assert a signal equals a value; false when it contradicts a constant.
    [[nodiscard]] bool force(const Sig &s, bool value);

  private:
    Sig encode_gate(const Gate &g, const std::vector<Sig> &in,
                    std::map<std::string, int> &key_vars);
    Sig encode_xor_chain(bool invert, const std::vector<Sig> &in);
    Sig encode_lut(const Gate &g, const std::vector<Sig> &in,
                   std::map<std::string, int> &key_vars);

    Cnf &cnf_;
};

/// Standard gate-consistency CNF of a netlist's copies (spec operation shape:
/// pass the attacker netlist; copies share PI variables).
Cnf encode_cnf(const Netlist &n, int copy_count);

/// Two-copy CNF plus an output-difference constraint: satisfiable iff two key
/// assignments produce different outputs for some input.
Cnf build_miter(const Netlist &n);

/// DIMACS "p cnf" serialization (vars printed 1-based).
std::string to_dimacs(const std::vector<std::vector<Lit>> &clauses, int num_vars);

struct DimacsProblem {
    int num_vars = 0;
    std::vector<std::vector<Lit>> clauses;
};

/// Parse a DIMACS "p cnf" problem file.
DimacsProblem parse_dimacs(const std::string &text);

struct DimacsOutcome {
    SolveResult result = SolveResult::Unknown;
    std::vector<int8_t> model; // indexed by 0-based var; 1 true, -1 false, 0 unknown
};

/// Parse SAT-competition style output: "s SATISFIABLE|UNSATISFIABLE" plus
/// "v" model lines terminated by 0.
DimacsOutcome parse_solver_output(const std::string &text, int num_vars);

/// Uniform solving interface over the in-process CDCL engine and an external
/// DIMACS solver subprocess; accumulates call counts and wall time.
class SatBackend {
  public:
    virtual ~SatBackend() = default;

    int new_var();
    void ensure_vars(int count);
    void add_clause(const std::vector<Lit> &lits);
    SolveResult solve(const std::vector<Lit> &assumptions = {}, double budget_seconds = 0.0);
    virtual bool model_value(int var) const = 0;

    int num_vars() const { return num_vars_; }
    uint64_t solve_calls() const { return solve_calls_; }
    double solve_seconds() const { return solve_seconds_; }

  protected:
    virtual void on_new_var() = 0;
    virtual void on_add_clause(const std::vector<Lit> &lits) = 0;
    virtual SolveResult do_solve(const std::vector<Lit> &assumptions, double budget) = 0;

    int num_vars_ = 0;
    uint64_t solve_calls_ = 0;
    double solve_seconds_ = 0.0;
};

/// Select a backend: empty command = internal CDCL engine, otherwise a shell
/// command invoked as "<command> <cnf-file>" expecting competition output.
/// `seed` randomizes a small fraction of internal-engine decisions.
std::unique_ptr<SatBackend> make_backend(const std::string &solver_command = "",
                                         uint64_t seed = 0);

/// Append cnf clauses [cursor, end) to the backend and advance the cursor.
void sync_to_backend(SatBackend &backend, const Cnf &cnf, size_t &clause_cursor);

} // namespace lutlock
