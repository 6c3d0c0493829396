#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace hfsl::collab {

// Payloads are priced at 32-bit width whatever the in-memory precision.
inline constexpr std::uint64_t kBytesPerElement = 4;

enum class Direction { up, down };
enum class PayloadKind { weights, activations, activation_grads, labels };

inline const char* to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

inline const char* to_string(PayloadKind k) {
    switch (k) {
        case PayloadKind::weights: return "weights";
        case PayloadKind::activations: return "activations";
        case PayloadKind::activation_grads: return "activation_grads";
        case PayloadKind::labels: return "labels";
    }
    return "?";
}

struct LedgerEntry {
    int round = 0;
    Direction direction = Direction::up;
    PayloadKind kind = PayloadKind::weights;
    std::string client;
    std::uint64_t elements = 0;
    std::uint64_t bytes = 0;
};

class CommLedger {
public:
    void record(int round, Direction dir, PayloadKind kind, const std::string& client, std::uint64_t elements) {
        entries_.push_back({round, dir, kind, client, elements, elements * kBytesPerElement});
        total_ += elements * kBytesPerElement;
    }

    const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
    std::uint64_t total_bytes() const noexcept { return total_; }
    double total_mb() const { return static_cast<double>(total_) / (1024.0 * 1024.0); }

    std::uint64_t bytes_in_round(int round) const {
        std::uint64_t b = 0;
        for (const auto& e : entries_) b += e.round == round ? e.bytes : 0;
        return b;
    }

    std::uint64_t bytes_of(PayloadKind kind) const {
        std::uint64_t b = 0;
        for (const auto& e : entries_) b += e.kind == kind ? e.bytes : 0;
        return b;
    }

    // (round, direction, kind) -> bytes, for the per-round breakdown file.
    std::map<std::tuple<int, int, int>, std::uint64_t> breakdown() const {
        std::map<std::tuple<int, int, int>, std::uint64_t> out;
        for (const auto& e : entries_) {
            out[{e.round, static_cast<int>(e.direction), static_cast<int>(e.kind)}] += e.bytes;
        }
        return out;
    }

private:
    std::vector<LedgerEntry> entries_;
    std::uint64_t total_ = 0;
};

}  // namespace hfsl::collab
