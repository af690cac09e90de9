#include "cval/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace cval::kernels {
namespace {

std::atomic<const Ops*> g_override{nullptr};

const Ops* pick_default() {
  if (const char* env = std::getenv("CVAL_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return &avx2_ops();
  }
  return avx2_supported() ? &avx2_ops() : &scalar_ops();
}

}  // namespace

const Ops& ops() {
  if (const Ops* o = g_override.load(std::memory_order_relaxed)) return *o;
  static const Ops* selected = pick_default();
  return *selected;
}

void set_ops(const Ops* table) {
  g_override.store(table, std::memory_order_relaxed);
}

std::string active_backend() { return ops().name; }

}  // namespace cval::kernels
