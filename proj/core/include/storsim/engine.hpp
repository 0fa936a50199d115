#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "storsim/llm.hpp"
#include "storsim/measurement.hpp"
#include "storsim/scenario.hpp"

namespace storsim {

struct EngineOptions {
  std::string out_dir;        // empty: in-memory run, nothing persisted
  int workers = 0;            // 0: one per active agent, capped
  int stop_after_episode = -1;  // for interruption tests: halt after this episode
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  std::string config_hash;    // hash of the originating config file, if any
};

/// Executes the full simulation: provisioning, persona generation, follow
/// graph, introductions, then episodes_per_day episodes of (activity draws,
/// concurrent perceive/decide, serialized effects, longitudinal survey,
/// analytics), checkpointing after each episode. Artifacts are a pure
/// function of (config, root seed, scripted rules).
RunArtifacts run_simulation(const ScenarioConfig& config, LlmBackend& llm,
                            const EngineOptions& options = {});

/// Continues a checkpointed run with the caller's backend. Scripted-response
/// cycle positions are restored from the checkpoint. Identical downstream
/// behavior: resuming an interrupted run reproduces the uninterrupted
/// artifacts byte for byte.
RunArtifacts resume_simulation(const std::string& checkpoint_path,
                               LlmBackend& llm,
                               const EngineOptions& options = {});

/// CLI path: rebuilds the backend recorded in the checkpoint (scripted rules
/// reloaded from their stored path and verified by hash; remote settings from
/// the environment), then resumes.
RunArtifacts resume_from_checkpoint(const std::string& checkpoint_path,
                                    const EngineOptions& options = {});

/// Reconstructs artifacts from a checkpoint directory without running
/// anything (for re-export).
RunArtifacts load_artifacts(const std::string& checkpoint_path);

/// Default checkpoint file name inside a run directory.
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kEventLogFile = "events.log";
inline constexpr const char* kTranscriptFile = "transcript.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

}  // namespace storsim
