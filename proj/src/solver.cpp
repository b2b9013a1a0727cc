#include "lutlock/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace lutlock {

namespace {

double now_seconds()
{
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// Luby restart sequence: 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ...
double luby(double y, int x)
{
    int size, seq;
    for (size = 1, seq = 0; size < x + 1; seq++, size = 2 * size + 1)
        ;
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        seq--;
        x = x % size;
    }
    return std::pow(y, seq);
}

} // namespace

struct CdclSolver::Clause {
    std::vector<Lit> lits;
    double act = 0.0;
    bool learnt = false;
};

CdclSolver::CdclSolver() = default;

CdclSolver::~CdclSolver()
{
    for (Clause *c : clauses_)
        delete c;
    for (Clause *c : learnts_)
        delete c;
}

int CdclSolver::new_var()
{
    int v = (int)assigns_.size();
    assigns_.push_back(kUndef);
    phase_.push_back(kFalse);
    reason_.push_back(nullptr);
    level_.push_back(0);
    activity_.push_back(0.0);
    seen_.push_back(0);
    heap_pos_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
}

void CdclSolver::attach(Clause *c)
{
    watches_[neg_lit(c->lits[0])].push_back(c);
    watches_[neg_lit(c->lits[1])].push_back(c);
}

void CdclSolver::detach(Clause *c)
{
    for (Lit w : {neg_lit(c->lits[0]), neg_lit(c->lits[1])}) {
        auto &ws = watches_[w];
        auto it = std::find(ws.begin(), ws.end(), c);
        if (it != ws.end()) {
            *it = ws.back();
            ws.pop_back();
        }
    }
}

void CdclSolver::remove_clause(Clause *c)
{
    detach(c);
    delete c;
}

bool CdclSolver::locked(const Clause *c) const
{
    return value_lit(c->lits[0]) == kTrue && reason_[lit_var(c->lits[0])] == c;
}

bool CdclSolver::add_clause(const std::vector<Lit> &lits)
{
    if (!ok_)
        return false;
    cancel_until(0);

    std::vector<Lit> cl(lits);
    std::sort(cl.begin(), cl.end());
    cl.erase(std::unique(cl.begin(), cl.end()), cl.end());
    std::vector<Lit> out;
    for (size_t i = 0; i < cl.size(); i++) {
        if (i + 1 < cl.size() && cl[i + 1] == neg_lit(cl[i]))
            return true; // tautology
        int8_t v = value_lit(cl[i]);
        if (v == kTrue)
            return true; // already satisfied at level 0
        if (v != kFalse)
            out.push_back(cl[i]);
    }
    if (out.empty()) {
        ok_ = false;
        return false;
    }
    if (out.size() == 1) {
        enqueue(out[0], nullptr);
        if (propagate() != nullptr)
            ok_ = false;
        return ok_;
    }
    Clause *c = new Clause{std::move(out), 0.0, false};
    clauses_.push_back(c);
    attach(c);
    return true;
}

void CdclSolver::enqueue(Lit l, Clause *from)
{
    int v = lit_var(l);
    assigns_[v] = lit_sign(l) ? kFalse : kTrue;
    reason_[v] = from;
    level_[v] = decision_level();
    trail_.push_back(l);
}

CdclSolver::Clause *CdclSolver::propagate()
{
    while (qhead_ < trail_.size()) {
        Lit p = trail_[qhead_++];
        stats_.propagations++;
        auto &ws = watches_[p];
        size_t i = 0, j = 0;
        while (i < ws.size()) {
            Clause *c = ws[i++];
            auto &lits = c->lits;
            // ensure the falsified watch sits at lits[1]
            Lit false_lit = neg_lit(p);
            if (lits[0] == false_lit)
                std::swap(lits[0], lits[1]);
            if (value_lit(lits[0]) == kTrue) {
                ws[j++] = c;
                continue;
            }
            bool moved = false;
            for (size_t k = 2; k < lits.size(); k++) {
                if (value_lit(lits[k]) != kFalse) {
                    std::swap(lits[1], lits[k]);
                    watches_[neg_lit(lits[1])].push_back(c);
                    moved = true;
                    break;
                }
            }
            if (moved)
                continue;
            // unit or conflict
            ws[j++] = c;
            if (value_lit(lits[0]) == kFalse) {
                while (i < ws.size())
                    ws[j++] = ws[i++];
                ws.resize(j);
                qhead_ = trail_.size();
                return c;
            }
            enqueue(lits[0], c);
        }
        ws.resize(j);
    }
    return nullptr;
}

void CdclSolver::cancel_until(int level)
{
    if (decision_level() <= level)
        return;
    for (size_t i = trail_.size(); i-- > (size_t)trail_lim_[level];) {
        int v = lit_var(trail_[i]);
        phase_[v] = assigns_[v];
        assigns_[v] = kUndef;
        reason_[v] = nullptr;
        if (heap_pos_[v] < 0)
            heap_insert(v);
    }
    trail_.resize(trail_lim_[level]);
    trail_lim_.resize(level);
    qhead_ = trail_.size();
}

void CdclSolver::bump_var(int v)
{
    activity_[v] += var_inc_;
    if (activity_[v] > 1e100)
        rescale_var_activity();
    if (heap_pos_[v] >= 0)
        heap_percolate_up(heap_pos_[v]);
}

void CdclSolver::rescale_var_activity()
{
    for (double &a : activity_)
        a *= 1e-100;
    var_inc_ *= 1e-100;
}

void CdclSolver::bump_clause(Clause *c)
{
    c->act += cla_inc_;
    if (c->act > 1e20) {
        for (Clause *l : learnts_)
            l->act *= 1e-20;
        cla_inc_ *= 1e-20;
    }
}

// Basic redundancy check: a literal is redundant if its reason's remaining
// literals are all already marked (or at level 0).
bool CdclSolver::lit_redundant_basic(Lit l) const
{
    const Clause *r = reason_[lit_var(l)];
    if (r == nullptr)
        return false;
    for (size_t i = 1; i < r->lits.size(); i++) {
        Lit q = r->lits[i];
        if (!seen_[lit_var(q)] && level_[lit_var(q)] > 0)
            return false;
    }
    return true;
}

void CdclSolver::analyze(Clause *conflict, std::vector<Lit> &learnt, int &bt_level)
{
    learnt.clear();
    learnt.push_back(0); // slot for the asserting literal
    int path = 0;
    Lit p = -1;
    size_t index = trail_.size();
    Clause *c = conflict;

    do {
        if (c->learnt)
            bump_clause(c);
        for (size_t k = (p == -1 ? 0 : 1); k < c->lits.size(); k++) {
            Lit q = c->lits[k];
            int v = lit_var(q);
            if (!seen_[v] && level_[v] > 0) {
                seen_[v] = 1;
                seen_clear_.push_back(v);
                bump_var(v);
                if (level_[v] >= decision_level())
                    path++;
                else
                    learnt.push_back(q);
            }
        }
        while (!seen_[lit_var(trail_[index - 1])])
            index--;
        index--;
        p = trail_[index];
        c = reason_[lit_var(p)]; // reason clauses keep the implied literal first
        seen_[lit_var(p)] = 0;
        path--;
    } while (path > 0);
    learnt[0] = neg_lit(p);

    // minimize
    size_t out = 1;
    for (size_t i = 1; i < learnt.size(); i++)
        if (!lit_redundant_basic(learnt[i]))
            learnt[out++] = learnt[i];
    learnt.resize(out);

    // compute backtrack level and move that literal to position 1
    if (learnt.size() == 1) {
        bt_level = 0;
    } else {
        size_t max_i = 1;
        for (size_t i = 2; i < learnt.size(); i++)
            if (level_[lit_var(learnt[i])] > level_[lit_var(learnt[max_i])])
                max_i = i;
        std::swap(learnt[1], learnt[max_i]);
        bt_level = level_[lit_var(learnt[1])];
    }

    for (int v : seen_clear_)
        seen_[v] = 0;
    seen_clear_.clear();
}

void CdclSolver::heap_insert(int v)
{
    heap_pos_[v] = (int)heap_.size();
    heap_.push_back(v);
    heap_percolate_up(heap_pos_[v]);
}

void CdclSolver::heap_percolate_up(int i)
{
    int v = heap_[i];
    while (i > 0) {
        int parent = (i - 1) / 2;
        if (activity_[heap_[parent]] >= activity_[v])
            break;
        heap_[i] = heap_[parent];
        heap_pos_[heap_[i]] = i;
        i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

void CdclSolver::heap_percolate_down(int i)
{
    int v = heap_[i];
    size_t n = heap_.size();
    while (true) {
        size_t child = 2 * (size_t)i + 1;
        if (child >= n)
            break;
        if (child + 1 < n && activity_[heap_[child + 1]] > activity_[heap_[child]])
            child++;
        if (activity_[heap_[child]] <= activity_[v])
            break;
        heap_[i] = heap_[child];
        heap_pos_[heap_[i]] = i;
        i = (int)child;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

int CdclSolver::heap_pop()
{
    int v = heap_[0];
    heap_pos_[v] = -1;
    heap_[0] = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
        heap_pos_[heap_[0]] = 0;
        heap_percolate_down(0);
    }
    return v;
}

Lit CdclSolver::pick_branch_lit()
{
    if (random_freq_ > 0 && !heap_.empty() &&
        (double)(rng_() & 0xffff) / 65536.0 < random_freq_) {
        int v = heap_[rng_() % heap_.size()];
        if (assigns_[v] == kUndef)
            return mk_lit(v, phase_[v] != kTrue);
    }
    while (!heap_empty()) {
        int v = heap_pop();
        if (assigns_[v] == kUndef)
            return mk_lit(v, phase_[v] != kTrue);
    }
    return -1;
}

void CdclSolver::reduce_db()
{
    std::sort(learnts_.begin(), learnts_.end(),
              [](const Clause *a, const Clause *b) { return a->act < b->act; });
    size_t keep_from = learnts_.size() / 2;
    size_t j = 0;
    for (size_t i = 0; i < learnts_.size(); i++) {
        Clause *c = learnts_[i];
        if (i < keep_from && c->lits.size() > 2 && !locked(c))
            remove_clause(c);
        else
            learnts_[j++] = c;
    }
    learnts_.resize(j);
}

SolveResult CdclSolver::search(int64_t conflict_budget, const std::vector<Lit> &assumptions,
                               double deadline)
{
    int64_t conflicts_here = 0;
    std::vector<Lit> learnt;
    while (true) {
        Clause *conflict = propagate();
        if (conflict != nullptr) {
            stats_.conflicts++;
            conflicts_here++;
            if (decision_level() == 0)
                return SolveResult::Unsat;
            int bt;
            analyze(conflict, learnt, bt);
            cancel_until(bt);
            if (learnt.size() == 1) {
                cancel_until(0);
                enqueue(learnt[0], nullptr);
            } else {
                Clause *c = new Clause{learnt, cla_inc_, true};
                learnts_.push_back(c);
                attach(c);
                enqueue(learnt[0], c);
            }
            decay_var_activity();
            decay_clause_activity();
            if ((stats_.conflicts & 1023) == 0 && deadline > 0 && now_seconds() > deadline)
                return SolveResult::Unknown;
        } else {
            if (conflict_budget >= 0 && conflicts_here >= conflict_budget) {
                cancel_until(0);
                return SolveResult::Unknown; // restart
            }
            if ((double)learnts_.size() >= max_learnts_ + trail_.size())
                reduce_db();

            Lit next = -1;
            while (decision_level() < (int)assumptions.size()) {
                Lit a = assumptions[decision_level()];
                if (value_lit(a) == kTrue) {
                    trail_lim_.push_back((int)trail_.size()); // dummy level
                } else if (value_lit(a) == kFalse) {
                    return SolveResult::Unsat;
                } else {
                    next = a;
                    break;
                }
            }
            if (next == -1) {
                next = pick_branch_lit();
                if (next == -1) {
                    model_.assign(assigns_.begin(), assigns_.end());
                    return SolveResult::Sat;
                }
                stats_.decisions++;
            }
            trail_lim_.push_back((int)trail_.size());
            enqueue(next, nullptr);
        }
    }
}

SolveResult CdclSolver::solve(const std::vector<Lit> &assumptions, double budget_seconds)
{
    stats_.solve_calls++;
    if (!ok_)
        return SolveResult::Unsat;
    cancel_until(0);
    if (propagate() != nullptr) {
        ok_ = false;
        return SolveResult::Unsat;
    }
    double deadline = budget_seconds > 0 ? now_seconds() + budget_seconds : 0.0;
    max_learnts_ = std::max(1000.0, (double)clauses_.size() / 3.0);

    SolveResult result = SolveResult::Unknown;
    for (int restarts = 0;; restarts++) {
        int64_t budget = (int64_t)(luby(2.0, restarts) * 100);
        result = search(budget, assumptions, deadline);
        if (result != SolveResult::Unknown)
            break;
        if (deadline > 0 && now_seconds() > deadline)
            break;
        max_learnts_ *= 1.02;
    }
    cancel_until(0);
    return result;
}

} // namespace lutlock
