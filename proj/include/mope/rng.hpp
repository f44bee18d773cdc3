#ifndef MOPE_RNG_HPP
#define MOPE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace mope {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
   x += 0x9E3779B97F4A7C15ULL;
   x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
   x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
   return x ^ (x >> 31);
}

/// Child seed for stream `index` of `base`. Frozen: changing it changes every study output.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index)
{
   return splitmix64(splitmix64(base) ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/**
   mt19937_64 with distribution code that does not depend on the standard
   library implementation, so draws are identical across toolchains.
*/
class Rng {
public:
   explicit Rng(std::uint64_t seed) : engine_(seed) {}

   std::uint64_t next_u64() { return engine_(); }

   /// Uniform on [0, 1) with 53 random bits.
   double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

   /// Uniform on (0, 1].
   double uniform_open_low() { return 1.0 - uniform(); }

   double exponential() { return -std::log(uniform_open_low()); }

   /// Standard normal by Box-Muller; one draw per call.
   double normal()
   {
      const double radius = std::sqrt(-2.0 * std::log(uniform_open_low()));
      return radius * std::cos(6.283185307179586 * uniform());
   }

   /// Index drawn from unnormalized nonnegative weights by inversion.
   std::size_t categorical(std::span<const double> weights)
   {
      double total = 0.0;
      for (double w : weights)
         total += w;
      double u = uniform() * total;
      std::size_t last_positive = 0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
         if (weights[i] <= 0.0)
            continue;
         last_positive = i;
         if (u < weights[i])
            return i;
         u -= weights[i];
      }
      return last_positive;
   }

   /// Uniform integer in [0, n) by rejection.
   std::uint64_t below(std::uint64_t n)
   {
      const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
      std::uint64_t x;
      do {
         x = engine_();
      } while (x >= limit);
      return x % n;
   }

private:
   std::mt19937_64 engine_;
};

}  // namespace mope

#endif  // MOPE_RNG_HPP
