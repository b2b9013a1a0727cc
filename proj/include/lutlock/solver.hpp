#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lutlock {

/// Literal encoding: lit = 2*var + sign, sign 1 = negated. Vars are 0-based.
using Lit = int;

inline Lit mk_lit(int var, bool neg = false) { return 2 * var + (neg ? 1 : 0); }
inline Lit neg_lit(Lit l) { return l ^ 1; }
inline int lit_var(Lit l) { return l >> 1; }
inline bool lit_sign(Lit l) { return l & 1; }

enum class SolveResult { Sat, Unsat, Unknown };

/// Incremental CDCL solver: two-watched-literal propagation, VSIDS decisions,
/// first-UIP learning with basic minimization, Luby restarts, activity-based
/// learnt clause reduction, solve under assumptions, model extraction.
class CdclSolver {
  public:
    CdclSolver();
    ~CdclSolver();
    CdclSolver(const CdclSolver &) = delete;
    CdclSolver &operator=(const CdclSolver &) = delete;

    int new_var();
    int num_vars() const { return (int)assigns_.size(); }

    /// Add a clause; returns false if the formula became trivially unsat.
    bool add_clause(const std::vector<Lit> &lits);

    /// Solve under assumptions with an optional wall-clock budget (seconds,
    /// 0 = unlimited). Unknown means the budget ran out.
    SolveResult solve(const std::vector<Lit> &assumptions = {}, double budget_seconds = 0.0);

    /// Model access, valid after a Sat result.
    bool model_value(int var) const { return model_.at(var) == 1; }

    /// Occasional random decisions (freq in [0,1]); deterministic per seed.
    void set_random(uint64_t seed, double freq = 0.02)
    {
        rng_.seed(seed);
        random_freq_ = freq;
    }

    struct Stats {
        uint64_t conflicts = 0;
        uint64_t decisions = 0;
        uint64_t propagations = 0;
        uint64_t solve_calls = 0;
    };
    const Stats &stats() const { return stats_; }
    bool okay() const { return ok_; }

  private:
    struct Clause;

    enum : int8_t { kTrue = 1, kFalse = -1, kUndef = 0 };

    int8_t value_lit(Lit l) const
    {
        int8_t v = assigns_[lit_var(l)];
        return lit_sign(l) ? (int8_t)-v : v;
    }

    void attach(Clause *c);
    void detach(Clause *c);
    void remove_clause(Clause *c);
    bool locked(const Clause *c) const;

    void enqueue(Lit l, Clause *from);
    Clause *propagate();
    void cancel_until(int level);
    int decision_level() const { return (int)trail_lim_.size(); }

    void analyze(Clause *conflict, std::vector<Lit> &learnt, int &bt_level);
    bool lit_redundant_basic(Lit l) const;

    Lit pick_branch_lit();
    void bump_var(int v);
    void decay_var_activity() { var_inc_ /= var_decay_; }
    void bump_clause(Clause *c);
    void decay_clause_activity() { cla_inc_ /= cla_decay_; }
    void rescale_var_activity();

    void heap_insert(int v);
    void heap_percolate_up(int i);
    void heap_percolate_down(int i);
    int heap_pop();
    bool heap_empty() const { return heap_.empty(); }

    void reduce_db();

    SolveResult search(int64_t conflict_budget, const std::vector<Lit> &assumptions,
                       double deadline);

    bool ok_ = true;
    std::vector<Clause *> clauses_;
    std::vector<Clause *> learnts_;
    std::vector<std::vector<Clause *>> watches_; // indexed by literal
    std::vector<int8_t> assigns_;
    std::vector<int8_t> phase_;
    std::vector<Clause *> reason_;
    std::vector<int> level_;
    std::vector<Lit> trail_;
    std::vector<int> trail_lim_;
    size_t qhead_ = 0;

    std::vector<double> activity_;
    double var_inc_ = 1.0;
    double var_decay_ = 0.95;
    double cla_inc_ = 1.0;
    double cla_decay_ = 0.999;
    std::vector<int> heap_;     // variable indices ordered by activity
    std::vector<int> heap_pos_; // var -> heap index, -1 if absent

    std::vector<char> seen_;
    std::vector<int> seen_clear_;

    double max_learnts_ = 0.0;
    std::vector<int8_t> model_;
    Stats stats_;

    std::mt19937_64 rng_{1};
    double random_freq_ = 0.0;
};

} // namespace lutlock
