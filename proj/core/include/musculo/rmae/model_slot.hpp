#pragma once

#include <memory>
#include <mutex>

#include "musculo/rmae/model.hpp"

namespace musculo {

/// The published model plus a restore point. Readers take a shared snapshot
/// that stays valid while the learner publishes replacements.
class ModelSlot {
 public:
  explicit ModelSlot(RmaeModel initial);
  /// Copies share the immutable snapshots but get their own lock.
  ModelSlot(const ModelSlot& other);
  ModelSlot& operator=(const ModelSlot& other);

  std::shared_ptr<const RmaeModel> current() const;
  void publish(RmaeModel next);

  /// Copies the current model to the restore point.
  void save_restore_point();
  bool has_restore_point() const;
  /// Publishes the restore point; throws std::logic_error if none was saved.
  void restore();

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const RmaeModel> current_;
  std::shared_ptr<const RmaeModel> restore_;
};

}  // namespace musculo
