#include <algorithm>
#include <cmath>
#include <string>

#include "myinet/dataset.hpp"
#include "myinet/errors.hpp"

namespace myinet {

namespace {

struct SliceGeometry {
    double cy, cx;          // heart center, pixels
    double blood_r;         // pixels
    double wall;            // myocardium thickness, pixels
    double scar_center;     // radians
    double scar_half_arc;   // radians; 0 = no scar
    double transmurality;   // fraction of the wall, from the endocardium out
};

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

int classify(const SliceGeometry& g, double py, double px) {
    const double dy = py - g.cy, dx = px - g.cx;
    const double r = std::sqrt(dy * dy + dx * dx);
    if (r < g.blood_r) return kBlood;
    if (r < g.blood_r + g.wall) {
        if (g.scar_half_arc > 0.0 && r < g.blood_r + g.transmurality * g.wall) {
            const double ang = std::atan2(dy, dx);
            if (std::fabs(wrap_angle(ang - g.scar_center)) <= g.scar_half_arc) return kScar;
        }
        return kMuscle;
    }
    return kBackground;
}

}  // namespace

void PhantomSpec::validate() const {
    if (size < 16) throw DomainError("phantom: image size too small");
    if (blood_radius_lo > blood_radius_hi || wall_lo > wall_hi)
        throw DomainError("phantom: inverted geometry ranges");
    if (blood_radius_hi + wall_hi + center_jitter > 0.5)
        throw DomainError("phantom: ring does not fit in the frame (radius + wall + jitter > 0.5)");
    if (scar_prob < 0.0 || scar_prob > 1.0) throw DomainError("phantom: scar_prob outside [0,1]");
    if (slices_per_patient < 1) throw DomainError("phantom: slices_per_patient must be >= 1");
}

PhantomDataset generate_phantom(const PhantomSpec& spec, int count) {
    spec.validate();
    PhantomDataset ds;
    ds.samples.reserve(static_cast<size_t>(count));
    ds.patients.reserve(static_cast<size_t>(count));
    const double s = static_cast<double>(spec.size);

    for (int i = 0; i < count; ++i) {
        const int patient = i / spec.slices_per_patient;
        const int slice = i % spec.slices_per_patient;
        Rng patient_rng(derive_seed(spec.seed, static_cast<uint64_t>(patient), 0xFA17));

        // Patient-level base geometry; every slice re-derives it so slices can
        // be generated independently of each other.
        const double base_r = patient_rng.uniform(spec.blood_radius_lo, spec.blood_radius_hi);
        const double base_wall = patient_rng.uniform(spec.wall_lo, spec.wall_hi);
        const bool has_scar = patient_rng.uniform() < spec.scar_prob;
        const double scar_center = patient_rng.uniform(0.0, 2.0 * M_PI);
        const double scar_arc = patient_rng.uniform(spec.scar_arc_lo_deg, spec.scar_arc_hi_deg);
        const double transmurality = patient_rng.uniform(spec.transmural_lo, spec.transmural_hi);

        Rng slice_rng(derive_seed(spec.seed, static_cast<uint64_t>(patient) * 10007ULL +
                                                 static_cast<uint64_t>(slice),
                                  0x51CE));
        SliceGeometry g;
        g.cy = s * (0.5 + spec.center_jitter * (slice_rng.uniform() * 2.0 - 1.0));
        g.cx = s * (0.5 + spec.center_jitter * (slice_rng.uniform() * 2.0 - 1.0));
        g.blood_r = s * base_r * slice_rng.uniform(0.92, 1.08);
        g.wall = s * base_wall * slice_rng.uniform(0.92, 1.08);
        g.scar_half_arc = has_scar ? 0.5 * (scar_arc * M_PI / 180.0) * slice_rng.uniform(0.9, 1.1) : 0.0;
        g.scar_center = scar_center;
        g.transmurality = transmurality;

        Sample sample;
        sample.image = Tensor(1, 1, spec.size, spec.size);
        sample.labels = LabelMap(spec.size, spec.size);
        for (int y = 0; y < spec.size; ++y) {
            for (int x = 0; x < spec.size; ++x) {
                const int cls = classify(g, y + 0.5, x + 0.5);
                sample.labels.at(y, x) = static_cast<uint8_t>(cls);
                const double mean = spec.intensity_mean[static_cast<size_t>(cls)];
                const double v = mean + spec.noise_sigma * slice_rng.normal();
                sample.image.at(0, 0, y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
        ds.samples.push_back(std::move(sample));
        ds.patients.push_back("phantom" + std::to_string(patient));
    }
    return ds;
}

}  // namespace myinet
