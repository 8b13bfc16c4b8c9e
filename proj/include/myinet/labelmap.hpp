#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace myinet {

// Fixed class set. Raw label files may additionally contain 4 = MVO, which
// ingestion merges into scar.
inline constexpr int kNumClasses = 4;
inline constexpr int kBackground = 0;
inline constexpr int kBlood = 1;
inline constexpr int kMuscle = 2;
inline constexpr int kScar = 3;
inline constexpr int kRawMvo = 4;

inline const std::array<std::string, kNumClasses>& class_names() {
    static const std::array<std::string, kNumClasses> names = {"background", "blood", "muscle",
                                                               "scar"};
    return names;
}

/// Per-pixel class-index image.
struct LabelMap {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    LabelMap() = default;
    LabelMap(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    int64_t size() const { return static_cast<int64_t>(h) * w; }
    bool same_extents(const LabelMap& o) const { return h == o.h && w == o.w; }
};

}  // namespace myinet
