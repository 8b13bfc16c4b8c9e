#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "myinet/labelmap.hpp"
#include "myinet/rng.hpp"
#include "myinet/tensor.hpp"

namespace myinet {

struct SampleRecord {
    std::string image;
    std::string label;
    std::string patient;
    std::string split;  // "train" | "val" | "test" | "" before splitting
};
using Manifest = std::vector<SampleRecord>;

Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);
Manifest manifest_split(const Manifest& manifest, const std::string& split);

struct Sample {
    Tensor image;     // 1 x 1 x H x W, intensities in [0, 1]
    LabelMap labels;  // H x W
};

/// Loads an image/label pair: grayscale bilinearly resized to target_size,
/// intensities scaled to [0,1]; labels nearest-neighbor resized; raw MVO
/// (index 4) re-labeled to scar.
Sample load_sample(const std::string& image_path, const std::string& label_path,
                   int target_size = 256);

/// Shuffles patients by seed and assigns each greedily to the split with the
/// largest fractional image-count deficit. No patient spans two splits.
Manifest split_by_patient(const Manifest& manifest, std::array<double, 3> fractions,
                          uint64_t seed);

struct AugmentationPolicy {
    double rotation_lo_deg = 0.0;
    double rotation_hi_deg = 360.0;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
};

struct AugmentDraw {
    double angle_deg = 0.0;
    double scale = 1.0;
};

AugmentDraw draw_augmentation(const AugmentationPolicy& policy, Rng& rng);

/// Same rotation+scale applied to image (bilinear) and labels (nearest),
/// about the image center; out-of-frame regions fill with background/zero.
Sample augment_sample(const Sample& sample, const AugmentDraw& draw);

/// Corner-aligned bilinear resize of a 1-channel tensor (up or down).
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);
LabelMap resize_nearest(const LabelMap& labels, int out_h, int out_w);

// --- synthetic phantoms -----------------------------------------------------

/// Ring phantom mimicking a short-axis LGE slice: blood pool inside a
/// myocardium ring inside background, with a bright scar arc in the ring.
/// Geometric quantities are fractions of the image side.
struct PhantomSpec {
    int size = 64;
    double blood_radius_lo = 0.15, blood_radius_hi = 0.22;
    double wall_lo = 0.11, wall_hi = 0.16;
    double scar_arc_lo_deg = 60.0, scar_arc_hi_deg = 150.0;
    double transmural_lo = 0.55, transmural_hi = 1.0;
    double scar_prob = 0.85;  // per patient
    double center_jitter = 0.06;
    std::array<double, 4> intensity_mean = {0.12, 0.70, 0.35, 0.92};  // bg, blood, muscle, scar
    double noise_sigma = 0.05;
    int slices_per_patient = 5;
    uint64_t seed = 0;

    void validate() const;  // throws DomainError on infeasible geometry
};

struct PhantomDataset {
    std::vector<Sample> samples;
    std::vector<std::string> patients;  // parallel to samples
};

PhantomDataset generate_phantom(const PhantomSpec& spec, int count);

}  // namespace myinet
