#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace otfs {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Self-test of the transceiver chain and detectors on random instances:
/// DFT unitarity, constellation round trip, modulation round trip, scalar
/// versus matrix channel, pipeline versus effective channel, and the ML
/// metric bound on B-PIC-DSC and MMSE outputs.
std::vector<CheckResult> run_verification(std::uint64_t seed);

}  // namespace otfs
