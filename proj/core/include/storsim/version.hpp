#pragma once

namespace storsim {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever the prompt templates or the checkpoint layout change in a
// way that breaks replay of older runs.
inline constexpr const char* kPromptVersion = "1";
inline constexpr int kCheckpointVersion = 1;

}  // namespace storsim
