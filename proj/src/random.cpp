#include "gaussbm/random.hpp"

namespace gbm {
namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64_mix(splitmix64_mix(seed + kGolden) ^ ((stream * kGolden)
                          + 0x632be59bd9b4e019ull)))
{
}

CounterRng::result_type CounterRng::operator()()
{
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGolden);
}

CounterRng CounterRng::split(std::uint64_t stream) const
{
    return CounterRng(key_, stream + 1);
}

double CounterRng::uniform()
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open()
{
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal()
{
    return normal_(*this);
}

}  // namespace gbm
