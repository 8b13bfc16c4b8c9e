#include "myinet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "myinet/errors.hpp"
#include "myinet/kernels.hpp"
#include "myinet/png_io.hpp"

namespace myinet {

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid manifest JSON in " + path + ": " + e.what());
    }
    if (!j.is_array()) throw DataError("manifest must be a JSON array: " + path);
    Manifest m;
    for (const auto& rec : j) {
        SampleRecord r;
        r.image = rec.at("image").get<std::string>();
        r.label = rec.at("label").get<std::string>();
        r.patient = rec.at("patient").get<std::string>();
        r.split = rec.value("split", "");
        m.push_back(std::move(r));
    }
    return m;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : manifest)
        j.push_back({{"image", r.image}, {"label", r.label}, {"patient", r.patient}, {"split", r.split}});
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

Manifest manifest_split(const Manifest& manifest, const std::string& split) {
    Manifest out;
    for (const auto& r : manifest)
        if (r.split == split) out.push_back(r);
    return out;
}

Sample load_sample(const std::string& image_path, const std::string& label_path, int target_size) {
    const GrayImage raw = read_gray_png(image_path);
    const GrayImage raw_labels = read_index_png(label_path);
    if (raw.h != raw_labels.h || raw.w != raw_labels.w)
        throw DataError("image/label extent mismatch: " + image_path + " vs " + label_path);

    Tensor img(1, 1, raw.h, raw.w);
    for (int64_t i = 0; i < img.numel(); ++i)
        img.data()[i] = static_cast<double>(raw.v[static_cast<size_t>(i)]) / 255.0;

    LabelMap labels(raw_labels.h, raw_labels.w);
    for (size_t i = 0; i < raw_labels.v.size(); ++i) {
        uint8_t v = raw_labels.v[i];
        if (v > kRawMvo)
            throw DataError("label value " + std::to_string(v) + " > 4 in " + label_path);
        if (v == kRawMvo) v = kScar;  // MVO merged into scar
        labels.v[i] = v;
    }

    Sample s;
    s.image = raw.h == target_size && raw.w == target_size
                  ? std::move(img)
                  : resize_bilinear(img, target_size, target_size);
    s.labels = labels.h == target_size && labels.w == target_size
                   ? std::move(labels)
                   : resize_nearest(labels, target_size, target_size);
    return s;
}

Manifest split_by_patient(const Manifest& manifest, std::array<double, 3> fractions, uint64_t seed) {
    const double frac_sum = fractions[0] + fractions[1] + fractions[2];
    if (std::fabs(frac_sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

    std::map<std::string, std::vector<size_t>> by_patient;
    for (size_t i = 0; i < manifest.size(); ++i) by_patient[manifest[i].patient].push_back(i);
    if (by_patient.size() < 3) throw DomainError("split_by_patient: need at least 3 patients");

    std::vector<std::string> patients;
    for (const auto& [id, _] : by_patient) patients.push_back(id);
    Rng rng(derive_seed(seed, 0x5117));
    for (size_t i = patients.size(); i > 1; --i)
        std::swap(patients[i - 1], patients[rng.uniform_int(i)]);

    const char* split_names[3] = {"train", "val", "test"};
    const double total = static_cast<double>(manifest.size());
    double target[3], assigned[3] = {0, 0, 0};
    for (int s = 0; s < 3; ++s) target[s] = fractions[static_cast<size_t>(s)] * total;

    Manifest out = manifest;
    for (const auto& id : patients) {
        int best = 0;
        double best_need = -1.0;
        for (int s = 0; s < 3; ++s) {
            if (target[s] <= 0.0) continue;
            const double need = (target[s] - assigned[s]) / target[s];
            if (need > best_need + 1e-12) {
                best_need = need;
                best = s;
            }
        }
        for (size_t idx : by_patient[id]) out[idx].split = split_names[best];
        assigned[best] += static_cast<double>(by_patient[id].size());
    }
    return out;
}

AugmentDraw draw_augmentation(const AugmentationPolicy& policy, Rng& rng) {
    AugmentDraw d;
    d.angle_deg = rng.uniform(policy.rotation_lo_deg, policy.rotation_hi_deg);
    d.scale = rng.uniform(policy.scale_lo, policy.scale_hi);
    return d;
}

namespace {

// Source coordinates within 1e-9 of a grid point are snapped so that exact
// 90-degree rotations permute pixels without interpolation residue.
double snap(double v) {
    const double r = std::round(v);
    return std::fabs(v - r) < 1e-9 ? r : v;
}

}  // namespace

Sample augment_sample(const Sample& sample, const AugmentDraw& draw) {
    const int h = sample.labels.h, w = sample.labels.w;
    const double theta = draw.angle_deg * M_PI / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    const double inv_scale = 1.0 / draw.scale;

    Sample out;
    out.image = Tensor(1, 1, h, w);
    out.labels = LabelMap(h, w, kBackground);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dy = y - cy, dx = x - cx;
            // inverse map: rotate by -theta, scale by 1/s
            const double sy = snap(cy + inv_scale * (cos_t * dy + sin_t * dx));
            const double sx = snap(cx + inv_scale * (-sin_t * dy + cos_t * dx));
            if (sy < 0.0 || sy > h - 1 || sx < 0.0 || sx > w - 1) continue;  // background fill

            const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
            const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
            const double fy = sy - y0, fx = sx - x0;
            const double v00 = sample.image.at(0, 0, y0, x0), v01 = sample.image.at(0, 0, y0, x1);
            const double v10 = sample.image.at(0, 0, y1, x0), v11 = sample.image.at(0, 0, y1, x1);
            const double top = v00 + (v01 - v00) * fx;
            const double bot = v10 + (v11 - v10) * fx;
            out.image.at(0, 0, y, x) = top + (bot - top) * fy;

            const int ny = fy < 0.5 ? y0 : y1;
            const int nx = fx < 0.5 ? x0 : x1;
            out.labels.at(y, x) = sample.labels.at(ny, nx);
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
    return bilinear_upsample(image, out_h, out_w);
}

LabelMap resize_nearest(const LabelMap& labels, int out_h, int out_w) {
    LabelMap out(out_h, out_w);
    const double sy = out_h > 1 ? static_cast<double>(labels.h - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(labels.w - 1) / (out_w - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        const int iy = std::min(labels.h - 1, static_cast<int>(std::lround(y * sy)));
        for (int x = 0; x < out_w; ++x) {
            const int ix = std::min(labels.w - 1, static_cast<int>(std::lround(x * sx)));
            out.at(y, x) = labels.at(iy, ix);
        }
    }
    return out;
}

}  // namespace myinet
