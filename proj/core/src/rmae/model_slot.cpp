#include "musculo/rmae/model_slot.hpp"

#include <stdexcept>

namespace musculo {

ModelSlot::ModelSlot(RmaeModel initial)
    : current_(std::make_shared<const RmaeModel>(std::move(initial))) {}

ModelSlot::ModelSlot(const ModelSlot& other) {
  std::lock_guard lock(other.mutex_);
  current_ = other.current_;
  restore_ = other.restore_;
}

ModelSlot& ModelSlot::operator=(const ModelSlot& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  current_ = other.current_;
  restore_ = other.restore_;
  return *this;
}

std::shared_ptr<const RmaeModel> ModelSlot::current() const {
  std::lock_guard lock(mutex_);
  return current_;
}

void ModelSlot::publish(RmaeModel next) {
  auto ptr = std::make_shared<const RmaeModel>(std::move(next));
  std::lock_guard lock(mutex_);
  current_ = std::move(ptr);
}

void ModelSlot::save_restore_point() {
  std::lock_guard lock(mutex_);
  restore_ = current_;
}

bool ModelSlot::has_restore_point() const {
  std::lock_guard lock(mutex_);
  return restore_ != nullptr;
}

void ModelSlot::restore() {
  std::lock_guard lock(mutex_);
  if (restore_ == nullptr) throw std::logic_error("ModelSlot::restore: no restore point saved");
  current_ = restore_;
}

}  // namespace musculo
