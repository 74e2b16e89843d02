#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

#include "safer/app/config.hpp"
#include "safer/split.hpp"
#include "safer/synthetic.hpp"
#include "safer/trainer.hpp"

namespace safer::app {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kDiverged = 3 };

std::string version_string();

/// The split named by the config: read from data.split_dir, or made in-process
/// from data.interactions.
SplitBundle load_split(const RunConfig& config);

nlohmann::ordered_json to_json(const EpochDiagnostics& diag);

/// Runs every epoch of the configured solver on `train`.
Trainer train_model(const RunConfig& config, const InteractionSet& train,
                    const std::function<void(const EpochDiagnostics&, const ModelState&)>& on_epoch = {});

int cmd_split(const RunConfig& config);
int cmd_train(const RunConfig& config);
/// `which` is "test" or "validation".
int cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint, const std::string& which);
int cmd_sweep(const RunConfig& config, const std::filesystem::path& grid);
int cmd_synth(const SyntheticConfig& config, const std::filesystem::path& out);

/// Calls `body`, mapping exceptions to exit codes (configuration and input
/// errors 2, divergence 3, anything else 1) with a message on stderr.
int run_guarded(const std::function<int()>& body);

}  // namespace safer::app
