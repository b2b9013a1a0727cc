#include "lutlock/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace lutlock {

const char *to_string(GateKind kind)
{
    switch (kind) {
    case GateKind::And: return "AND";
    case GateKind::Nand: return "NAND";
    case GateKind::Or: return "OR";
    case GateKind::Nor: return "NOR";
    case GateKind::Xor: return "XOR";
    case GateKind::Xnor: return "XNOR";
    case GateKind::Not: return "NOT";
    case GateKind::Buff: return "BUFF";
    case GateKind::Lut: return "LUT";
    }
    return "?";
}

bool eval_gate(GateKind kind, const std::vector<uint8_t> &in)
{
    switch (kind) {
    case GateKind::And:
    case GateKind::Nand: {
        bool v = true;
        for (uint8_t b : in)
            v = v && b;
        return kind == GateKind::And ? v : !v;
    }
    case GateKind::Or:
    case GateKind::Nor: {
        bool v = false;
        for (uint8_t b : in)
            v = v || b;
        return kind == GateKind::Or ? v : !v;
    }
    case GateKind::Xor:
    case GateKind::Xnor: {
        bool v = false;
        for (uint8_t b : in)
            v = v != (b != 0);
        return kind == GateKind::Xor ? v : !v;
    }
    case GateKind::Not:
        return !in.at(0);
    case GateKind::Buff:
        return in.at(0);
    case GateKind::Lut:
        throw Error(ErrorKind::Precondition, "eval_gate called on a LUT");
    }
    return false;
}

size_t lut_index(const std::vector<uint8_t> &inputs)
{
    size_t idx = 0;
    for (uint8_t b : inputs)
        idx = (idx << 1) | (b ? 1u : 0u);
    return idx;
}

// ---------------------------------------------------------------------------
// Netlist

Netlist::Netlist(std::string name, std::vector<std::string> primary_inputs,
                 std::vector<std::string> primary_outputs, std::vector<Gate> gate_list)
    : name_(std::move(name)), primary_inputs_(std::move(primary_inputs)),
      primary_outputs_(std::move(primary_outputs))
{
    for (auto &g : gate_list) {
        std::string id = g.id;
        if (!gates_.emplace(id, std::move(g)).second)
            throw Error(ErrorKind::DuplicateDefinition, "net '" + id + "' defined more than once");
    }
    validate_and_index();
}

void Netlist::validate_and_index()
{
    std::set<std::string> pis(primary_inputs_.begin(), primary_inputs_.end());
    if (pis.size() != primary_inputs_.size())
        throw Error(ErrorKind::DuplicateDefinition, "duplicate primary input");
    for (const auto &pi : pis)
        if (gates_.count(pi))
            throw Error(ErrorKind::DuplicateDefinition, "net '" + pi + "' is both input and gate");

    for (const auto &[id, g] : gates_) {
        if (g.kind == GateKind::Not || g.kind == GateKind::Buff) {
            if (g.inputs.size() != 1)
                throw Error(ErrorKind::BadArity, std::string(to_string(g.kind)) + " '" + id +
                                "' must have exactly 1 input");
        } else if (g.kind == GateKind::Lut) {
            if (g.inputs.empty())
                throw Error(ErrorKind::BadArity, "LUT '" + id + "' must have at least 1 input");
        } else if (g.inputs.size() < 2) {
            throw Error(ErrorKind::BadArity, std::string(to_string(g.kind)) + " '" + id +
                            "' must have at least 2 inputs");
        }
        if (g.kind == GateKind::Lut) {
            if (g.lut_content.size() != (size_t{1} << g.arity()))
                throw Error(ErrorKind::LutLiteralMismatch,
                            "LUT '" + id + "' content length does not match arity");
        } else if (!g.lut_content.empty()) {
            throw Error(ErrorKind::LutLiteralMismatch,
                        "gate '" + id + "' carries LUT content but is not a LUT");
        }
        for (const auto &in : g.inputs) {
            if (in == id)
                throw Error(ErrorKind::CycleDetected, "self-loop on net '" + id + "'");
            if (!pis.count(in) && !gates_.count(in))
                throw Error(ErrorKind::UndefinedNet, "undefined net '" + in + "'");
            consumers_[in].push_back(id);
            consumer_slots_[in]++;
        }
    }
    for (auto &[net, cons] : consumers_) {
        std::sort(cons.begin(), cons.end());
        cons.erase(std::unique(cons.begin(), cons.end()), cons.end());
    }

    for (const auto &po : primary_outputs_) {
        if (!pis.count(po) && !gates_.count(po))
            throw Error(ErrorKind::UndefinedNet, "undefined output net '" + po + "'");
        po_slots_[po]++;
    }

    // Kahn with a min-heap over gate ids: deterministic order, detects cycles.
    std::map<std::string, int> pending;
    for (const auto &[id, g] : gates_) {
        int n = 0;
        for (const auto &in : g.inputs)
            if (gates_.count(in))
                n++;
        pending[id] = n;
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto &[id, n] : pending)
        if (n == 0)
            ready.push(id);
    topo_order_.reserve(gates_.size());
    while (!ready.empty()) {
        std::string id = ready.top();
        ready.pop();
        topo_order_.push_back(id);
        for (const auto &c : consumers(id)) {
            // count multi-edges once per slot
            int slots = 0;
            for (const auto &in : gates_.at(c).inputs)
                if (in == id)
                    slots++;
            if ((pending[c] -= slots) == 0)
                ready.push(c);
        }
    }
    if (topo_order_.size() != gates_.size())
        throw Error(ErrorKind::CycleDetected, "netlist contains a combinational cycle");
}

const Gate &Netlist::gate(const std::string &id) const
{
    auto it = gates_.find(id);
    if (it == gates_.end())
        throw Error(ErrorKind::UnknownGate, "no gate '" + id + "'");
    return it->second;
}

const Gate *Netlist::find_gate(const std::string &id) const
{
    auto it = gates_.find(id);
    return it == gates_.end() ? nullptr : &it->second;
}

bool Netlist::is_primary_input(const std::string &net) const
{
    return std::find(primary_inputs_.begin(), primary_inputs_.end(), net) !=
           primary_inputs_.end();
}

const std::vector<std::string> &Netlist::consumers(const std::string &net) const
{
    static const std::vector<std::string> empty;
    auto it = consumers_.find(net);
    return it == consumers_.end() ? empty : it->second;
}

int Netlist::consumer_slots(const std::string &net) const
{
    auto it = consumer_slots_.find(net);
    return it == consumer_slots_.end() ? 0 : it->second;
}

int Netlist::po_slots(const std::string &net) const
{
    auto it = po_slots_.find(net);
    return it == po_slots_.end() ? 0 : it->second;
}

Netlist Netlist::with_gate_replaced(Gate g) const
{
    std::vector<Gate> list;
    list.reserve(gates_.size());
    bool found = false;
    for (const auto &[id, old] : gates_) {
        if (id == g.id) {
            list.push_back(g);
            found = true;
        } else {
            list.push_back(old);
        }
    }
    if (!found)
        throw Error(ErrorKind::UnknownGate, "no gate '" + g.id + "'");
    return Netlist(name_, primary_inputs_, primary_outputs_, std::move(list));
}

// ---------------------------------------------------------------------------
// Bench parser

namespace {

struct Line {
    int no;
    std::string text;
};

std::string upper(std::string s)
{
    for (char &c : s)
        c = (char)std::toupper((unsigned char)c);
    return s;
}

bool is_name_char(char c)
{
    return std::isalnum((unsigned char)c) || c == '_' || c == '.' || c == '[' || c == ']' ||
           c == '-' || c == '/';
}

class LineParser {
  public:
    LineParser(const std::string &text, int line_no) : s_(text), line_(line_no) {}

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_]))
            pos_++;
    }

    bool at_end()
    {
        skip_ws();
        return pos_ >= s_.size();
    }

    char peek()
    {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    void expect(char c)
    {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        pos_++;
    }

    std::string name()
    {
        skip_ws();
        size_t start = pos_;
        while (pos_ < s_.size() && is_name_char(s_[pos_]))
            pos_++;
        if (pos_ == start)
            fail("expected a net name");
        return s_.substr(start, pos_ - start);
    }

    std::vector<std::string> name_list_in_parens()
    {
        expect('(');
        std::vector<std::string> names;
        names.push_back(name());
        while (peek() == ',') {
            expect(',');
            names.push_back(name());
        }
        expect(')');
        return names;
    }

    [[noreturn]] void fail(const std::string &msg)
    {
        throw Error(ErrorKind::Syntax, msg + " (column " + std::to_string(pos_ + 1) + ")", line_,
                    (int)pos_ + 1);
    }

    int line_no() const { return line_; }

  private:
    const std::string &s_;
    size_t pos_ = 0;
    int line_;
};

std::vector<uint8_t> parse_lut_literal(const std::string &lit, size_t arity, LineParser &p)
{
    if (lit.size() < 3 || lit[0] != '0' || (lit[1] != 'x' && lit[1] != 'X'))
        p.fail("LUT content must be a 0x literal");
    size_t bits = size_t{1} << arity;
    size_t want_digits = bits < 4 ? 1 : bits / 4;
    std::string digits = lit.substr(2);
    if (digits.size() != want_digits)
        throw Error(ErrorKind::LutLiteralMismatch,
                    "LUT literal '" + lit + "' has " + std::to_string(digits.size()) +
                        " hex digits, expected " + std::to_string(want_digits) + " for " +
                        std::to_string(arity) + " inputs",
                    p.line_no());
    std::vector<uint8_t> content(bits, 0);
    for (size_t d = 0; d < digits.size(); d++) {
        char c = digits[digits.size() - 1 - d];
        int v;
        if (c >= '0' && c <= '9')
            v = c - '0';
        else if (c >= 'a' && c <= 'f')
            v = 10 + c - 'a';
        else if (c >= 'A' && c <= 'F')
            v = 10 + c - 'A';
        else {
            p.fail("bad hex digit in LUT literal");
        }
        for (int b = 0; b < 4; b++) {
            size_t i = d * 4 + b;
            if (v & (1 << b)) {
                if (i >= bits)
                    throw Error(ErrorKind::LutLiteralMismatch,
                                "LUT literal '" + lit + "' sets bits beyond 2^arity",
                                p.line_no());
                content[i] = 1;
            }
        }
    }
    return content;
}

} // namespace

Netlist parse_bench(const std::string &text, const ParseOptions &opts)
{
    std::vector<std::string> pis, pos;
    std::vector<Gate> gate_list;
    std::set<std::string> defined;

    std::istringstream ss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(ss, raw)) {
        line_no++;
        if (auto hash = raw.find('#'); hash != std::string::npos)
            raw.resize(hash);
        LineParser p(raw, line_no);
        if (p.at_end())
            continue;

        std::string head = p.name();
        std::string uhead = upper(head);
        if (uhead == "INPUT" || uhead == "OUTPUT") {
            p.expect('(');
            std::string net = p.name();
            p.expect(')');
            if (!p.at_end())
                p.fail("trailing characters");
            if (uhead == "INPUT") {
                if (!defined.insert(net).second)
                    throw Error(ErrorKind::DuplicateDefinition, "net '" + net + "' already defined",
                                line_no);
                pis.push_back(net);
            } else {
                pos.push_back(net);
            }
            continue;
        }

        p.expect('=');
        std::string kind_tok = upper(p.name());
        Gate g;
        g.id = head;
        if (kind_tok == "LUT") {
            g.kind = GateKind::Lut;
            std::string lit = p.name();
            g.inputs = p.name_list_in_parens();
            if (g.inputs.size() > opts.max_lut_inputs)
                throw Error(ErrorKind::BadArity,
                            "LUT '" + g.id + "' has " + std::to_string(g.inputs.size()) +
                                " inputs, limit is " + std::to_string(opts.max_lut_inputs),
                            line_no);
            g.lut_content = parse_lut_literal(lit, g.inputs.size(), p);
        } else if (kind_tok == "DFF" || kind_tok == "DFFSR" || kind_tok == "LATCH") {
            throw Error(ErrorKind::SequentialElement,
                        "sequential element '" + kind_tok + "' is not supported", line_no);
        } else {
            if (kind_tok == "AND")
                g.kind = GateKind::And;
            else if (kind_tok == "NAND")
                g.kind = GateKind::Nand;
            else if (kind_tok == "OR")
                g.kind = GateKind::Or;
            else if (kind_tok == "NOR")
                g.kind = GateKind::Nor;
            else if (kind_tok == "XOR")
                g.kind = GateKind::Xor;
            else if (kind_tok == "XNOR")
                g.kind = GateKind::Xnor;
            else if (kind_tok == "NOT" || kind_tok == "INV")
                g.kind = GateKind::Not;
            else if (kind_tok == "BUFF" || kind_tok == "BUF")
                g.kind = GateKind::Buff;
            else
                p.fail("unknown gate kind '" + kind_tok + "'");
            g.inputs = p.name_list_in_parens();
        }
        if (!p.at_end())
            p.fail("trailing characters");
        if (!defined.insert(g.id).second)
            throw Error(ErrorKind::DuplicateDefinition, "net '" + g.id + "' already defined",
                        line_no);
        gate_list.push_back(std::move(g));
    }

    return Netlist("bench", std::move(pis), std::move(pos), std::move(gate_list));
}

Netlist parse_bench_file(const std::string &path, const ParseOptions &opts)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    Netlist n = parse_bench(buf.str(), opts);
    // name the netlist after the file stem
    std::string stem = path;
    if (auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos)
        stem = stem.substr(0, dot);
    return Netlist(stem, n.primary_inputs(), n.primary_outputs(),
                   [&] {
                       std::vector<Gate> gs;
                       for (const auto &[id, g] : n.gates())
                           gs.push_back(g);
                       return gs;
                   }());
}

std::string write_bench(const Netlist &n)
{
    std::ostringstream out;
    out << "# " << n.name() << "\n";
    for (const auto &pi : n.primary_inputs())
        out << "INPUT(" << pi << ")\n";
    for (const auto &po : n.primary_outputs())
        out << "OUTPUT(" << po << ")\n";
    for (const auto &id : n.topo_order()) {
        const Gate &g = n.gate(id);
        if (g.kind == GateKind::Lut) {
            size_t bits = g.lut_content.size();
            size_t digits = bits < 4 ? 1 : bits / 4;
            std::string hex(digits, '0');
            for (size_t d = 0; d < digits; d++) {
                int v = 0;
                for (int b = 0; b < 4; b++) {
                    size_t i = d * 4 + b;
                    if (i < bits && g.lut_content[i])
                        v |= 1 << b;
                }
                hex[digits - 1 - d] = "0123456789ABCDEF"[v];
            }
            out << id << " = LUT 0x" << hex << " (";
        } else {
            out << id << " = " << to_string(g.kind) << "(";
        }
        for (size_t i = 0; i < g.inputs.size(); i++)
            out << (i ? ", " : "") << g.inputs[i];
        out << ")\n";
    }
    return out.str();
}

std::vector<std::string> topo_order(const Netlist &n)
{
    return n.topo_order();
}

FaninCone fanin_cone(const Netlist &n, const std::string &root)
{
    if (!n.has_net(root))
        throw Error(ErrorKind::UnknownNet, "no net '" + root + "'");
    FaninCone cone;
    std::deque<std::pair<std::string, int>> queue;
    if (const Gate *g = n.find_gate(root)) {
        cone.depth[g->id] = 0;
        queue.emplace_back(g->id, 0);
    }
    while (!queue.empty()) {
        auto [id, d] = queue.front();
        queue.pop_front();
        for (const auto &in : n.gate(id).inputs) {
            const Gate *drv = n.find_gate(in);
            if (!drv || cone.depth.count(in))
                continue;
            cone.depth[in] = d + 1;
            queue.emplace_back(in, d + 1);
        }
    }
    return cone;
}

std::vector<std::string> reachable_outputs(const Netlist &n, const std::string &id)
{
    if (!n.find_gate(id))
        throw Error(ErrorKind::UnknownGate, "no gate '" + id + "'");
    std::set<std::string> seen{id};
    std::set<std::string> outs;
    std::deque<std::string> queue{id};
    while (!queue.empty()) {
        std::string net = queue.front();
        queue.pop_front();
        if (n.po_slots(net) > 0)
            outs.insert(net);
        for (const auto &c : n.consumers(net))
            if (seen.insert(c).second)
                queue.push_back(c);
    }
    return {outs.begin(), outs.end()};
}

int fanout_count(const Netlist &n, const std::string &id)
{
    if (!n.find_gate(id))
        throw Error(ErrorKind::UnknownGate, "no gate '" + id + "'");
    return n.consumer_slots(id) + n.po_slots(id);
}

std::string key_bit_name(const std::string &gate_id, size_t bit)
{
    return "k_" + gate_id + "_" + std::to_string(bit);
}

std::vector<std::string> key_bit_names(const Netlist &n)
{
    std::vector<std::string> names;
    for (const auto &[id, g] : n.gates()) {
        if (g.kind != GateKind::Lut || !g.content_is_key)
            continue;
        for (size_t i = 0; i < g.lut_content.size(); i++)
            names.push_back(key_bit_name(id, i));
    }
    return names;
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(const Netlist &n) : netlist_(&n)
{
    int idx = 0;
    for (const auto &pi : n.primary_inputs()) {
        net_index_[pi] = idx++;
        net_names_.push_back(pi);
    }
    int key_base = 0;
    // first pass fixes the key layout (id-sorted, matching key_bit_names)
    std::map<std::string, int> key_offsets;
    for (const auto &[id, g] : n.gates()) {
        if (g.kind == GateKind::Lut && g.content_is_key) {
            key_offsets[id] = key_base;
            for (size_t i = 0; i < g.lut_content.size(); i++)
                key_names_.push_back(key_bit_name(id, i));
            key_base += (int)g.lut_content.size();
        }
    }
    for (const auto &id : n.topo_order()) {
        net_index_[id] = idx++;
        net_names_.push_back(id);
    }
    for (const auto &id : n.topo_order()) {
        const Gate &g = n.gate(id);
        Node node;
        node.kind = g.kind;
        for (const auto &in : g.inputs)
            node.inputs.push_back(net_index_.at(in));
        node.lut = g.kind == GateKind::Lut ? &g.lut_content : nullptr;
        node.key_base = g.content_is_key && g.kind == GateKind::Lut ? key_offsets.at(id) : -1;
        nodes_.push_back(std::move(node));
    }
    for (const auto &po : n.primary_outputs())
        po_index_.push_back(net_index_.at(po));
}

void Evaluator::eval(std::vector<uint8_t> &values, const std::vector<uint8_t> &key) const
{
    size_t base = netlist_->primary_inputs().size();
    for (size_t i = 0; i < nodes_.size(); i++) {
        const Node &node = nodes_[i];
        if (node.kind == GateKind::Lut) {
            size_t idx = 0;
            for (int in : node.inputs)
                idx = (idx << 1) | values[in];
            values[base + i] =
                node.key_base >= 0 ? key[node.key_base + idx] : (*node.lut)[idx];
        } else {
            static thread_local std::vector<uint8_t> ins;
            ins.clear();
            for (int in : node.inputs)
                ins.push_back(values[in]);
            values[base + i] = eval_gate(node.kind, ins) ? 1 : 0;
        }
    }
}

std::vector<uint8_t> Evaluator::run_po(const std::vector<uint8_t> &pi,
                                       const std::vector<uint8_t> &key) const
{
    if (pi.size() != netlist_->primary_inputs().size())
        throw Error(ErrorKind::MissingBit, "primary input vector has wrong length");
    if (key.size() != key_names_.size())
        throw Error(ErrorKind::MissingBit, "key vector has wrong length");
    std::vector<uint8_t> values(net_names_.size(), 0);
    std::copy(pi.begin(), pi.end(), values.begin());
    eval(values, key);
    std::vector<uint8_t> out;
    out.reserve(po_index_.size());
    for (int i : po_index_)
        out.push_back(values[i]);
    return out;
}

Assignment Evaluator::run(const Assignment &pi, const Assignment &key) const
{
    std::vector<uint8_t> values(net_names_.size(), 0);
    size_t i = 0;
    for (const auto &name : netlist_->primary_inputs()) {
        auto it = pi.find(name);
        if (it == pi.end())
            throw Error(ErrorKind::MissingBit, "missing primary input bit '" + name + "'");
        values[i++] = it->second ? 1 : 0;
    }
    std::vector<uint8_t> key_bits;
    key_bits.reserve(key_names_.size());
    for (const auto &name : key_names_) {
        auto it = key.find(name);
        if (it == key.end())
            throw Error(ErrorKind::MissingBit, "missing key bit '" + name + "'");
        key_bits.push_back(it->second ? 1 : 0);
    }
    eval(values, key_bits);
    Assignment out;
    for (size_t v = 0; v < net_names_.size(); v++)
        out[net_names_[v]] = values[v] != 0;
    return out;
}

Assignment simulate(const Netlist &n, const Assignment &pi, const Assignment &key)
{
    return Evaluator(n).run(pi, key);
}

} // namespace lutlock
