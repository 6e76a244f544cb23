#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ledg/graphdata/sampling.hpp"
#include "ledg/numerics/parameters.hpp"

namespace ledg {

/// Which snapshot supplies the message-passing structure for the target batch.
///  same_snapshot:     window t-w+1..t, target encoded on G^t.
///  previous_snapshot: window t-w..t-1, target encoded on G^(t-1).
enum class StructureMode { same_snapshot, previous_snapshot };

inline std::string_view to_string(StructureMode m) {
    return m == StructureMode::same_snapshot ? "same_snapshot" : "previous_snapshot";
}
inline StructureMode structure_mode_from_string(std::string_view s) {
    if (s == "same_snapshot") return StructureMode::same_snapshot;
    if (s == "previous_snapshot") return StructureMode::previous_snapshot;
    throw ValidationError("unknown target_structure_mode '" + std::string(s) + "'");
}

inline std::string_view to_string(GradMode m) { return m == GradMode::exact ? "exact" : "first_order"; }
inline GradMode grad_mode_from_string(std::string_view s) {
    if (s == "first_order") return GradMode::first_order;
    if (s == "exact") return GradMode::exact;
    throw ValidationError("unknown gradient_mode '" + std::string(s) + "'");
}

inline std::string_view to_string(Optimizer::Kind k) { return k == Optimizer::Kind::sgd ? "sgd" : "adam"; }
inline Optimizer::Kind optimizer_from_string(std::string_view s) {
    if (s == "sgd") return Optimizer::Kind::sgd;
    if (s == "adam") return Optimizer::Kind::adam;
    throw ValidationError("unknown optimizer '" + std::string(s) + "'");
}

struct TrainingConfig {
    std::size_t window_size = 5;
    double eta_in = 0.02;
    double eta_out = 0.002;
    double lambda = 0.1;
    GradMode gradient_mode = GradMode::first_order;
    StructureMode structure = StructureMode::same_snapshot;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    Optimizer::Kind outer_optimizer = Optimizer::Kind::sgd;
    std::size_t patience = 10;      // early-stop patience in epochs; used when early_stop is set
    bool early_stop = false;
    bool validate_each_epoch = false;
    NegativeSampling train_negatives{1, Shortfall::error};
    NegativeSampling eval_negatives{100, Shortfall::use_full_pool};

    void validate() const {
        if (window_size < 1) throw ValidationError("window_size must be >= 1");
        if (!(eta_in >= 0)) throw ValidationError("eta_in must be >= 0");
        if (!(eta_out > 0)) throw ValidationError("eta_out must be > 0");
        if (!(lambda >= 0)) throw ValidationError("lambda must be >= 0");
    }
};

/// Mixes seed components into one well-spread 64-bit seed (splitmix64 steps).
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(a) ^ b) ^ c);
}

}  // namespace ledg
