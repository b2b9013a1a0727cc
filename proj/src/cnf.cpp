#include "lutlock/cnf.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace lutlock {

// ---------------------------------------------------------------------------
// CnfBuilder

Sig CnfBuilder::encode_xor_chain(bool invert, const std::vector<Sig> &in)
{
    bool phase = invert;
    std::vector<Lit> lits;
    for (const Sig &s : in) {
        if (s.is_const)
            phase ^= s.cval;
        else
            lits.push_back(s.lit);
    }
    if (lits.empty())
        return Sig::constant(phase);
    Sig acc = Sig::of(lits[0]);
    for (size_t i = 1; i < lits.size(); i++)
        acc = make_xor(acc, Sig::of(lits[i]));
    return phase ? acc.negated() : acc;
}

Sig CnfBuilder::make_xor(Sig a, Sig b)
{
    if (a.is_const)
        return a.cval ? b.negated() : b;
    if (b.is_const)
        return b.cval ? a.negated() : a;
    if (a.lit == b.lit)
        return Sig::constant(false);
    if (a.lit == neg_lit(b.lit))
        return Sig::constant(true);
    Lit o = mk_lit(cnf_.new_var());
    cnf_.add({neg_lit(o), a.lit, b.lit});
    cnf_.add({neg_lit(o), neg_lit(a.lit), neg_lit(b.lit)});
    cnf_.add({o, neg_lit(a.lit), b.lit});
    cnf_.add({o, a.lit, neg_lit(b.lit)});
    return Sig::of(o);
}

bool CnfBuilder::force(const Sig &s, bool value)
{
    if (s.is_const)
        return s.cval == value;
    cnf_.add({value ? s.lit : neg_lit(s.lit)});
    return true;
}

Sig CnfBuilder::encode_lut(const Gate &g, const std::vector<Sig> &in,
                           std::map<std::string, int> &key_vars)
{
    size_t arity = g.arity();
    std::vector<size_t> var_pos; // input positions that are literals
    size_t const_bits = 0;       // full-index bits contributed by constants
    for (size_t j = 0; j < arity; j++) {
        if (in[j].is_const) {
            if (in[j].cval)
                const_bits |= size_t{1} << (arity - 1 - j);
        } else {
            var_pos.push_back(j);
        }
    }
    size_t r = var_pos.size();

    auto full_index = [&](size_t var_pattern) {
        size_t idx = const_bits;
        for (size_t b = 0; b < r; b++) {
            if ((var_pattern >> (r - 1 - b)) & 1)
                idx |= size_t{1} << (arity - 1 - var_pos[b]);
        }
        return idx;
    };
    auto key_var_for = [&](size_t idx) {
        std::string name = key_bit_name(g.id, idx);
        auto it = key_vars.find(name);
        if (it == key_vars.end())
            it = key_vars.emplace(name, cnf_.new_var()).first;
        return it->second;
    };
    // clause prefix deselecting a var pattern
    auto selector = [&](size_t var_pattern) {
        std::vector<Lit> c;
        for (size_t b = 0; b < r; b++) {
            Lit l = in[var_pos[b]].lit;
            bool bit = (var_pattern >> (r - 1 - b)) & 1;
            c.push_back(bit ? neg_lit(l) : l);
        }
        return c;
    };

    if (g.content_is_key) {
        if (r == 0)
            return Sig::of(mk_lit(key_var_for(const_bits)));
        Lit o = mk_lit(cnf_.new_var());
        for (size_t p = 0; p < (size_t{1} << r); p++) {
            Lit k = mk_lit(key_var_for(full_index(p)));
            std::vector<Lit> c1 = selector(p);
            c1.push_back(neg_lit(o));
            c1.push_back(k);
            cnf_.add(std::move(c1));
            std::vector<Lit> c2 = selector(p);
            c2.push_back(o);
            c2.push_back(neg_lit(k));
            cnf_.add(std::move(c2));
        }
        return Sig::of(o);
    }

    // concrete content: restricted truth table over the variable inputs
    std::vector<uint8_t> table(size_t{1} << r);
    for (size_t p = 0; p < table.size(); p++)
        table[p] = g.lut_content.at(full_index(p));
    bool all0 = std::all_of(table.begin(), table.end(), [](uint8_t b) { return !b; });
    bool all1 = std::all_of(table.begin(), table.end(), [](uint8_t b) { return b; });
    if (all0 || all1)
        return Sig::constant(all1);
    if (r == 1)
        return table[1] ? Sig::of(in[var_pos[0]].lit) : Sig::of(neg_lit(in[var_pos[0]].lit));
    Lit o = mk_lit(cnf_.new_var());
    for (size_t p = 0; p < table.size(); p++) {
        std::vector<Lit> c = selector(p);
        c.push_back(table[p] ? o : neg_lit(o));
        cnf_.add(std::move(c));
    }
    return Sig::of(o);
}

Sig CnfBuilder::encode_gate(const Gate &g, const std::vector<Sig> &in,
                            std::map<std::string, int> &key_vars)
{
    switch (g.kind) {
    case GateKind::And:
    case GateKind::Nand:
    case GateKind::Or:
    case GateKind::Nor: {
        bool is_and = g.kind == GateKind::And || g.kind == GateKind::Nand;
        bool invert = g.kind == GateKind::Nand || g.kind == GateKind::Nor;
        // controlling value: false for AND, true for OR
        bool controlling = !is_and;
        std::vector<Lit> lits;
        for (const Sig &s : in) {
            if (s.is_const) {
                if (s.cval == controlling)
                    return Sig::constant(controlling != invert);
            } else {
                lits.push_back(s.lit);
            }
        }
        if (lits.empty())
            return Sig::constant(!controlling != invert);
        if (lits.size() == 1)
            return invert ? Sig::of(neg_lit(lits[0])) : Sig::of(lits[0]);
        Lit o = mk_lit(cnf_.new_var());
        if (is_and) {
            std::vector<Lit> big{o};
            for (Lit l : lits) {
                cnf_.add({neg_lit(o), l});
                big.push_back(neg_lit(l));
            }
            cnf_.add(std::move(big));
        } else {
            std::vector<Lit> big{neg_lit(o)};
            for (Lit l : lits) {
                cnf_.add({o, neg_lit(l)});
                big.push_back(l);
            }
            cnf_.add(std::move(big));
        }
        return invert ? Sig::of(neg_lit(o)) : Sig::of(o);
    }
    case GateKind::Xor:
        return encode_xor_chain(false, in);
    case GateKind::Xnor:
        return encode_xor_chain(true, in);
    case GateKind::Not:
        return in[0].negated();
    case GateKind::Buff:
        return in[0];
    case GateKind::Lut:
        return encode_lut(g, in, key_vars);
    }
    return Sig{};
}

std::map<std::string, Sig> CnfBuilder::encode(const Netlist &n,
                                              std::map<std::string, int> &key_vars,
                                              const std::map<std::string, bool> &pi_consts)
{
    std::map<std::string, Sig> nets;
    for (const auto &pi : n.primary_inputs()) {
        auto it = pi_consts.find(pi);
        if (it != pi_consts.end()) {
            nets[pi] = Sig::constant(it->second);
        } else {
            auto vi = cnf_.pi_vars.find(pi);
            if (vi == cnf_.pi_vars.end())
                vi = cnf_.pi_vars.emplace(pi, cnf_.new_var()).first;
            nets[pi] = Sig::of(mk_lit(vi->second));
        }
    }
    for (const auto &id : n.topo_order()) {
        const Gate &g = n.gate(id);
        std::vector<Sig> in;
        in.reserve(g.inputs.size());
        for (const auto &name : g.inputs)
            in.push_back(nets.at(name));
        nets[id] = encode_gate(g, in, key_vars);
    }
    return nets;
}

// ---------------------------------------------------------------------------
// spec operations

Cnf encode_cnf(const Netlist &n, int copy_count)
{
    Cnf cnf;
    CnfBuilder b(cnf);
    for (int c = 0; c < copy_count; c++) {
        cnf.key_vars.emplace_back();
        cnf.nets.push_back(b.encode(n, cnf.key_vars.back()));
    }
    return cnf;
}

Cnf build_miter(const Netlist &n)
{
    Cnf cnf;
    CnfBuilder b(cnf);
    for (int c = 0; c < 2; c++) {
        cnf.key_vars.emplace_back();
        cnf.nets.push_back(b.encode(n, cnf.key_vars.back()));
    }
    std::vector<Lit> any_diff;
    for (const auto &po : n.primary_outputs()) {
        Sig d = b.make_xor(cnf.nets[0].at(po), cnf.nets[1].at(po));
        if (d.is_const) {
            if (d.cval) {
                // structurally forced difference
                Lit t = mk_lit(cnf.new_var());
                cnf.add({t});
                any_diff.push_back(t);
            }
            continue;
        }
        cnf.diff_vars.push_back(lit_var(d.lit));
        any_diff.push_back(d.lit);
    }
    if (any_diff.empty()) {
        cnf.add({}); // identical copies on every output: no difference possible
        return cnf;
    }
    cnf.add(std::move(any_diff));
    return cnf;
}

// ---------------------------------------------------------------------------
// DIMACS

std::string to_dimacs(const std::vector<std::vector<Lit>> &clauses, int num_vars)
{
    std::ostringstream out;
    out << "p cnf " << num_vars << " " << clauses.size() << "\n";
    for (const auto &c : clauses) {
        for (Lit l : c)
            out << (lit_sign(l) ? -(lit_var(l) + 1) : lit_var(l) + 1) << " ";
        out << "0\n";
    }
    return out.str();
}

DimacsProblem parse_dimacs(const std::string &text)
{
    DimacsProblem p;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == 'c')
            continue;
        if (line[0] == 'p') {
            std::istringstream hs(line);
            std::string tok, fmt;
            long long vars = 0, clauses = 0;
            hs >> tok >> fmt >> vars >> clauses;
            if (fmt != "cnf")
                throw Error(ErrorKind::Syntax, "not a DIMACS cnf header");
            p.num_vars = (int)vars;
            continue;
        }
        std::istringstream cs(line);
        long long v;
        std::vector<Lit> clause;
        while (cs >> v) {
            if (v == 0) {
                p.clauses.push_back(clause);
                clause.clear();
                continue;
            }
            int var = (int)std::abs(v) - 1;
            if (var >= p.num_vars)
                p.num_vars = var + 1;
            clause.push_back(mk_lit(var, v < 0));
        }
        if (!clause.empty())
            p.clauses.push_back(clause);
    }
    return p;
}

DimacsOutcome parse_solver_output(const std::string &text, int num_vars)
{
    DimacsOutcome outcome;
    outcome.model.assign(num_vars, 0);
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind("s ", 0) == 0) {
            if (line.find("UNSATISFIABLE") != std::string::npos)
                outcome.result = SolveResult::Unsat;
            else if (line.find("SATISFIABLE") != std::string::npos)
                outcome.result = SolveResult::Sat;
        } else if (line.rfind("v ", 0) == 0 || line == "v") {
            std::istringstream vs(line.substr(1));
            long long v;
            while (vs >> v) {
                if (v == 0)
                    continue;
                int var = (int)(std::abs(v) - 1);
                if (var < num_vars)
                    outcome.model[var] = v > 0 ? 1 : -1;
            }
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Backends

int SatBackend::new_var()
{
    on_new_var();
    return num_vars_++;
}

void SatBackend::ensure_vars(int count)
{
    while (num_vars_ < count)
        new_var();
}

void SatBackend::add_clause(const std::vector<Lit> &lits)
{
    on_add_clause(lits);
}

SolveResult SatBackend::solve(const std::vector<Lit> &assumptions, double budget_seconds)
{
    auto t0 = std::chrono::steady_clock::now();
    SolveResult r = do_solve(assumptions, budget_seconds);
    solve_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    solve_calls_++;
    return r;
}

namespace {

class InternalBackend final : public SatBackend {
  public:
    explicit InternalBackend(uint64_t seed)
    {
        if (seed != 0)
            solver_.set_random(seed);
    }

    bool model_value(int var) const override { return solver_.model_value(var); }

  protected:
    void on_new_var() override { solver_.new_var(); }
    void on_add_clause(const std::vector<Lit> &lits) override { solver_.add_clause(lits); }
    SolveResult do_solve(const std::vector<Lit> &assumptions, double budget) override
    {
        return solver_.solve(assumptions, budget);
    }

  private:
    CdclSolver solver_;
};

class DimacsProcessBackend final : public SatBackend {
  public:
    explicit DimacsProcessBackend(std::string command) : command_(std::move(command)) {}

    bool model_value(int var) const override { return model_.at(var) == 1; }

  protected:
    void on_new_var() override {}
    void on_add_clause(const std::vector<Lit> &lits) override { clauses_.push_back(lits); }

    SolveResult do_solve(const std::vector<Lit> &assumptions, double budget) override
    {
        std::vector<std::vector<Lit>> all = clauses_;
        for (Lit a : assumptions)
            all.push_back({a});

        char path[] = "/tmp/lutlock-XXXXXX";
        int fd = mkstemp(path);
        if (fd < 0)
            throw Error(ErrorKind::Io, "cannot create temporary CNF file");
        {
            std::string text = to_dimacs(all, num_vars_);
            FILE *f = fdopen(fd, "w");
            fwrite(text.data(), 1, text.size(), f);
            fclose(f);
        }

        std::string cmd;
        if (budget > 0)
            cmd = "timeout " + std::to_string((long long)budget + 1) + " ";
        cmd += command_;
        cmd += " ";
        cmd += path;
        cmd += " 2>/dev/null";

        std::string output;
        FILE *pipe = popen(cmd.c_str(), "r");
        if (!pipe) {
            std::remove(path);
            throw Error(ErrorKind::Io, "cannot run solver command '" + command_ + "'");
        }
        std::array<char, 4096> buf;
        size_t got;
        while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
            output.append(buf.data(), got);
        int status = pclose(pipe);
        std::remove(path);

        DimacsOutcome outcome = parse_solver_output(output, num_vars_);
        if (outcome.result == SolveResult::Unknown && WIFEXITED(status)) {
            int code = WEXITSTATUS(status);
            if (code == 10)
                outcome.result = SolveResult::Sat;
            else if (code == 20)
                outcome.result = SolveResult::Unsat;
        }
        if (outcome.result == SolveResult::Sat)
            model_ = std::move(outcome.model);
        return outcome.result;
    }

  private:
    std::string command_;
    std::vector<std::vector<Lit>> clauses_;
    std::vector<int8_t> model_;
};

} // namespace

std::unique_ptr<SatBackend> make_backend(const std::string &solver_command, uint64_t seed)
{
    if (solver_command.empty() || solver_command == "internal")
        return std::make_unique<InternalBackend>(seed);
    return std::make_unique<DimacsProcessBackend>(solver_command);
}

void sync_to_backend(SatBackend &backend, const Cnf &cnf, size_t &clause_cursor)
{
    backend.ensure_vars(cnf.num_vars);
    for (; clause_cursor < cnf.clauses.size(); clause_cursor++)
        backend.add_clause(cnf.clauses[clause_cursor]);
}

} // namespace lutlock
