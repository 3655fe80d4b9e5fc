#include "oed/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace oed::kernels {

namespace {

struct Dispatch {
  QuadFormsFn quad_forms = scalar::quad_forms;
  WeightedGramFn weighted_gram = scalar::weighted_gram;
  std::string variant = "scalar";

  Dispatch() {
#if defined(OED_HAVE_AVX2_TU)
    const char* env = std::getenv("OED_KERNELS");
    const bool forced_scalar = env && std::strcmp(env, "scalar") == 0;
    if (!forced_scalar && __builtin_cpu_supports("avx2") &&
        __builtin_cpu_supports("fma")) {
      quad_forms = avx2::quad_forms;
      weighted_gram = avx2::weighted_gram;
      variant = "avx2";
    }
#endif
  }
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

QuadFormsFn quad_forms = dispatch().quad_forms;
WeightedGramFn weighted_gram = dispatch().weighted_gram;

const std::string& active_variant() { return dispatch().variant; }

}  // namespace oed::kernels
