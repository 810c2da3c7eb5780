#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gbm {

//---------------------------------------------------------------------------//
/*!
 * Counter-based random source keyed by (seed, stream).
 *
 * The i-th output is the SplitMix64 finalizer applied to key + i * golden,
 * so any stream can be regenerated or split without shared state. Distinct
 * stream ids give statistically independent substreams.
 */
class CounterRng
{
  public:
    using result_type = std::uint64_t;

    static constexpr std::string_view generator_id = "splitmix64-counter/v1";

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()();

    //! Independent child stream
    CounterRng split(std::uint64_t stream) const;

    //! Uniform on [0, 1) with 53 random bits
    double uniform();
    //! Uniform on (0, 1)
    double uniform_open();
    double normal();

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_;
};

//! SplitMix64 output function
std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace gbm
