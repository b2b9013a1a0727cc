#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lutlock {

enum class ErrorKind {
    Syntax,
    UndefinedNet,
    DuplicateDefinition,
    CycleDetected,
    LutLiteralMismatch,
    SequentialElement,
    BadArity,
    UnknownNet,
    UnknownGate,
    MissingBit,
    NotPlainGate,
    AlreadyLut,
    Io,
    Precondition,
    OracleInconsistent,
};

/// Single error type for the whole library; `kind()` distinguishes the cases
/// the callers care about, `line()`/`column()` are nonzero for parse errors.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          kind_(kind), line_(line), column_(column)
    {
    }

    ErrorKind kind() const { return kind_; }
    int line() const { return line_; }
    int column() const { return column_; }

  private:
    ErrorKind kind_;
    int line_;
    int column_;
};

enum class GateKind { And, Nand, Or, Nor, Xor, Xnor, Not, Buff, Lut };

const char *to_string(GateKind kind);

struct Gate {
    std::string id;                  // output net name, unique in the netlist
    GateKind kind = GateKind::And;
    std::vector<std::string> inputs; // ordered, first input is the LUT MSB
    std::vector<uint8_t> lut_content; // 2^arity bits, bit i = output for pattern i; empty unless LUT
    bool content_is_key = false;      // true when the content bits are key bits (attacker view)

    size_t arity() const { return inputs.size(); }
};

/// Net values, keyed by net (or key-bit) name.
using Assignment = std::map<std::string, bool>;

/// Evaluate a plain gate on concrete input values.
bool eval_gate(GateKind kind, const std::vector<uint8_t> &inputs);

/// LUT content index for an input pattern (first input = most significant bit).
size_t lut_index(const std::vector<uint8_t> &inputs);

/// Immutable combinational netlist. All invariants (acyclic, unique ids,
/// defined nets, LUT content shape) are checked at construction; derived
/// netlists are built with `with_gate_replaced`.
class Netlist {
  public:
    Netlist() = default;
    Netlist(std::string name, std::vector<std::string> primary_inputs,
            std::vector<std::string> primary_outputs, std::vector<Gate> gate_list);

    const std::string &name() const { return name_; }
    const std::vector<std::string> &primary_inputs() const { return primary_inputs_; }
    const std::vector<std::string> &primary_outputs() const { return primary_outputs_; }
    const std::map<std::string, Gate> &gates() const { return gates_; }

    const Gate &gate(const std::string &id) const;
    const Gate *find_gate(const std::string &id) const;
    bool is_primary_input(const std::string &net) const;
    bool has_net(const std::string &net) const { return is_primary_input(net) || gates_.count(net); }

    /// Gate ids consuming `net` (deduplicated, sorted).
    const std::vector<std::string> &consumers(const std::string &net) const;
    /// Gate-input slots consuming `net` (duplicated inputs count twice).
    int consumer_slots(const std::string &net) const;
    /// Occurrences of `net` in the primary output list.
    int po_slots(const std::string &net) const;

    /// Gate ids in dependency order, ties broken by ascending id.
    const std::vector<std::string> &topo_order() const { return topo_order_; }

    Netlist with_gate_replaced(Gate g) const;

  private:
    void validate_and_index();

    std::string name_;
    std::vector<std::string> primary_inputs_;
    std::vector<std::string> primary_outputs_;
    std::map<std::string, Gate> gates_;

    std::map<std::string, std::vector<std::string>> consumers_;
    std::map<std::string, int> consumer_slots_;
    std::map<std::string, int> po_slots_;
    std::vector<std::string> topo_order_;
};

struct ParseOptions {
    size_t max_lut_inputs = 6;
};

/// Parse the bench dialect: INPUT/OUTPUT lines, `o = KIND(a, b)` gate lines,
/// `o = LUT 0xHEX (a, b)` LUT lines, '#' comments, case-insensitive keywords.
Netlist parse_bench(const std::string &text, const ParseOptions &opts = {});
Netlist parse_bench_file(const std::string &path, const ParseOptions &opts = {});

/// Inverse of parse_bench up to isomorphism; gates emitted in topological order.
std::string write_bench(const Netlist &n);

/// Gate ids in dependency order (same as Netlist::topo_order, kept as a free
/// function since it is part of the module surface).
std::vector<std::string> topo_order(const Netlist &n);

struct FaninCone {
    /// gate id -> BFS depth from the root net (root's driver = depth 0).
    std::map<std::string, int> depth;

    bool contains(const std::string &id) const { return depth.count(id) != 0; }
    size_t size() const { return depth.size(); }
};

/// Transitive fan-in of `root` as a breadth-first search toward the inputs.
FaninCone fanin_cone(const Netlist &n, const std::string &root);

/// Primary outputs transitively reachable from the output net of gate `id`.
std::vector<std::string> reachable_outputs(const Netlist &n, const std::string &id);

/// Consumer slots plus primary-output slots of gate `id`'s output net.
int fanout_count(const Netlist &n, const std::string &id);

/// Key-bit names of all content_is_key LUTs, id-sorted, bit index ascending.
std::vector<std::string> key_bit_names(const Netlist &n);
std::string key_bit_name(const std::string &gate_id, size_t bit);

/// Reusable single-pass evaluator over a fixed netlist.
class Evaluator {
  public:
    explicit Evaluator(const Netlist &n);

    /// Full net assignment; pi must cover all primary inputs, key all key bits.
    Assignment run(const Assignment &pi, const Assignment &key = {}) const;

    /// Fast path: values in primary_inputs()/key_bit_names() order; returns
    /// primary output values in primary_outputs() order.
    std::vector<uint8_t> run_po(const std::vector<uint8_t> &pi,
                                const std::vector<uint8_t> &key = {}) const;

    const std::vector<std::string> &key_names() const { return key_names_; }
    size_t num_inputs() const { return netlist_->primary_inputs().size(); }
    size_t num_outputs() const { return netlist_->primary_outputs().size(); }

  private:
    struct Node {
        GateKind kind;
        std::vector<int> inputs;          // net indices
        const std::vector<uint8_t> *lut;  // content for plain LUTs
        int key_base;                     // offset into key vector, -1 if not key LUT
    };

    const Netlist *netlist_;
    std::map<std::string, int> net_index_;
    std::vector<Node> nodes_;      // in topo order; output net index = num_pis + position
    std::vector<int> po_index_;
    std::vector<std::string> net_names_;
    std::vector<std::string> key_names_;

    void eval(std::vector<uint8_t> &values, const std::vector<uint8_t> &key) const;
};

/// One-shot simulation (spec surface); use Evaluator for repeated calls.
Assignment simulate(const Netlist &n, const Assignment &pi, const Assignment &key = {});

} // namespace lutlock
