#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "mmw2s/common/error.hpp"

namespace mmw2s {

enum class TrainStage : std::uint8_t { kAlign, kFinetune };

struct TrainConfig {
  double gamma = 2.0;
  double alpha = 0.5;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::size_t max_steps = 300;
  std::uint64_t seed = 0;
  TrainStage stage = TrainStage::kFinetune;
  /// Alignment pretraining steps run before fine-tuning (0 = skip).
  std::size_t align_steps = 0;
  double align_temperature = 0.07;
  /// Stop fine-tuning once accuracy on the training set reaches this value
  /// (checked every `check_every` steps; 0 disables).
  double stop_train_accuracy = 0.0;
  std::size_t check_every = 10;

  void validate() const {
    require(gamma >= 0.0, ErrorCode::kInvalidConfig, "gamma must be >= 0");
    require(alpha > 0.0 && alpha <= 1.0, ErrorCode::kInvalidConfig, "alpha must be in (0, 1]");
    require(lr > 0.0, ErrorCode::kInvalidConfig, "lr must be positive");
    require(batch_size >= 1, ErrorCode::kInvalidConfig, "batch_size must be positive");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::kInvalidConfig,
            "betas must be in [0, 1)");
    require(eps > 0.0 && weight_decay >= 0.0, ErrorCode::kInvalidConfig, "bad eps or weight decay");
    require(align_temperature > 0.0, ErrorCode::kInvalidConfig, "alignment temperature must be positive");
    require(check_every >= 1, ErrorCode::kInvalidConfig, "check_every must be positive");
  }

  /// Values named for the full-size model.
  static TrainConfig full_scale() {
    TrainConfig c;
    c.lr = 1e-5;
    return c;
  }

  friend void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"gamma", c.gamma},
                       {"alpha", c.alpha},
                       {"lr", c.lr},
                       {"batch_size", c.batch_size},
                       {"beta1", c.beta1},
                       {"beta2", c.beta2},
                       {"eps", c.eps},
                       {"weight_decay", c.weight_decay},
                       {"max_steps", c.max_steps},
                       {"seed", c.seed},
                       {"stage", c.stage == TrainStage::kAlign ? "align" : "finetune"},
                       {"align_steps", c.align_steps},
                       {"align_temperature", c.align_temperature},
                       {"stop_train_accuracy", c.stop_train_accuracy},
                       {"check_every", c.check_every}};
  }
  friend void from_json(const nlohmann::json& j, TrainConfig& c) {
    TrainConfig d;
    c.gamma = j.value("gamma", d.gamma);
    c.alpha = j.value("alpha", d.alpha);
    c.lr = j.value("lr", d.lr);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.beta1 = j.value("beta1", d.beta1);
    c.beta2 = j.value("beta2", d.beta2);
    c.eps = j.value("eps", d.eps);
    c.weight_decay = j.value("weight_decay", d.weight_decay);
    c.max_steps = j.value("max_steps", d.max_steps);
    c.seed = j.value("seed", d.seed);
    const std::string stage = j.value("stage", std::string("finetune"));
    require(stage == "align" || stage == "finetune", ErrorCode::kInvalidConfig, "stage must be align or finetune");
    c.stage = stage == "align" ? TrainStage::kAlign : TrainStage::kFinetune;
    c.align_steps = j.value("align_steps", d.align_steps);
    c.align_temperature = j.value("align_temperature", d.align_temperature);
    c.stop_train_accuracy = j.value("stop_train_accuracy", d.stop_train_accuracy);
    c.check_every = j.value("check_every", d.check_every);
  }
};

}  // namespace mmw2s
