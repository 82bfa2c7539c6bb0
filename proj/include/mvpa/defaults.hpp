#pragma once

#include <array>
#include <cstddef>
#include <string_view>

// Default analysis parameters used when a config or CLI flag leaves them out.
namespace mvpa::defaults {

inline constexpr std::size_t kDecodeFolds = 11;
inline constexpr std::size_t kStableVoxelCount = 500;
inline constexpr double kSearchlightRadiusMm = 4.0;
inline constexpr std::size_t kPermutations = 1000;
inline constexpr std::size_t kClusterCount = 2;
inline constexpr std::size_t kClusterRestarts = 10;
inline constexpr double kAlpha = 0.05;
inline constexpr double kAreaAccuracyThreshold = 0.52;
inline constexpr double kSvmC = 1.0;
inline constexpr double kRidgeLambda = 1.0;
inline constexpr std::size_t kRandomEmbeddingDim = 300;
inline constexpr std::size_t kRandomEmbeddingInits = 1000;
inline constexpr double kHalfStdFactor = 0.5;

inline constexpr std::array<std::string_view, 6> kCanonicalRegions = {
    "FFG", "IFG", "MTG", "PCC", "PCUN", "PHG"};

} // namespace mvpa::defaults
