#pragma once

#include <string>

#include "devfnn/stack.hpp"

namespace devfnn {

/// Full-fidelity stack state as versioned JSON: per-layer model dumps
/// (rules, RLS covariances, density statistics), voting state, feature
/// activations, warning buffer, and correlation accumulators. A stack
/// restored from its own dump continues the run bit-for-bit.
std::string save_checkpoint(const DeepStack& stack);
void save_checkpoint_file(const DeepStack& stack, const std::string& path);

/// Throws DataError on unknown format or version, or on structural
/// mismatches.
DeepStack load_checkpoint(const std::string& text);
DeepStack load_checkpoint_file(const std::string& path);

} // namespace devfnn
