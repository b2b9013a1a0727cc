#pragma once

#include "lutlock/netlist.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace lutlock {

/// Shape parameters for a generated combinational circuit. `locality` biases
/// gate inputs toward recently created nets, which controls logic depth and
/// cone overlap.
struct GenProfile {
    std::string name;
    int n_pi = 8;
    int n_po = 4;
    int n_gates = 32;
    int locality_window = 16;
    int locality_percent = 78;
    uint64_t seed = 1;
};

/// Profiles matching the published input/output/gate counts of the common
/// c-series benchmark circuits; returns nullopt for unknown names.
std::optional<GenProfile> named_profile(const std::string &name);

/// Deterministic random netlist for a profile: every gate reaches at least
/// one primary output and every primary input feeds at least one gate.
Netlist generate_circuit(const GenProfile &profile);

} // namespace lutlock
