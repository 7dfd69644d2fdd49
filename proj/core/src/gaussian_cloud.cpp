#include "gsstyle/gaussian_cloud.hpp"

#include "gsstyle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fmt/core.h>

namespace gsstyle {

    GaussianCloud GaussianCloud::with_size(std::size_t n, int sh_degree) {
        if (sh_degree < 0 || sh_degree > 3) {
            throw ArgumentError(fmt::format("sh_degree must be in [0,3], got {}", sh_degree));
        }
        GaussianCloud cloud;
        cloud.sh_degree = sh_degree;
        cloud.positions.assign(n * 3, 0.0);
        cloud.rotations.assign(n * 4, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            cloud.rotations[i * 4] = 1.0;
        }
        cloud.log_scales.assign(n * 3, 0.0);
        cloud.opacity_logits.assign(n, 0.0);
        cloud.sh_dc.assign(n * 3, 0.0);
        cloud.sh_rest.assign(n * 3 * static_cast<std::size_t>(sh_rest_per_channel(sh_degree)), 0.0);
        return cloud;
    }

    void GaussianCloud::validate() const {
        if (sh_degree < 0 || sh_degree > 3) {
            throw ArgumentError(fmt::format("sh_degree must be in [0,3], got {}", sh_degree));
        }
        const std::size_t n = size();
        auto check = [n](std::string_view name, std::size_t actual, std::size_t per) {
            if (actual != n * per) {
                throw ArgumentError(fmt::format("{} has {} values, expected {}", name, actual, n * per));
            }
        };
        check("positions", positions.size(), 3);
        check("rotations", rotations.size(), 4);
        check("log_scales", log_scales.size(), 3);
        check("sh_dc", sh_dc.size(), 3);
        check("sh_rest", sh_rest.size(), 3 * static_cast<std::size_t>(rest_per_channel()));
        for (std::size_t i = 0; i < n; ++i) {
            const double* q = &rotations[i * 4];
            const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
            if (std::abs(norm - 1.0) > 1e-6) {
                throw ArgumentError(fmt::format("rotation {} is not a unit quaternion (norm {})", i, norm));
            }
        }
    }

    void GaussianCloud::normalize_rotations() {
        for (std::size_t i = 0; i < size(); ++i) {
            double* q = &rotations[i * 4];
            const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
            if (norm > 0.0) {
                for (int k = 0; k < 4; ++k) {
                    q[k] /= norm;
                }
            } else {
                q[0] = 1.0;
            }
        }
    }

    std::string_view field_name(CloudField field) noexcept {
        switch (field) {
        case CloudField::Positions: return "positions";
        case CloudField::Rotations: return "rotations";
        case CloudField::LogScales: return "log_scales";
        case CloudField::OpacityLogits: return "opacity_logits";
        case CloudField::ShDc: return "sh_dc";
        case CloudField::ShRest: return "sh_rest";
        }
        return "unknown";
    }

    namespace {

        template <typename Cloud>
        auto& field_ref(Cloud& cloud, CloudField field) noexcept {
            switch (field) {
            case CloudField::Positions: return cloud.positions;
            case CloudField::Rotations: return cloud.rotations;
            case CloudField::LogScales: return cloud.log_scales;
            case CloudField::OpacityLogits: return cloud.opacity_logits;
            case CloudField::ShDc: return cloud.sh_dc;
            case CloudField::ShRest: break;
            }
            return cloud.sh_rest;
        }

        bool same_bits(const std::vector<double>& a, const std::vector<double>& b) noexcept {
            return a.size() == b.size() &&
                   (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
        }

    } // namespace

    std::span<double> field_values(GaussianCloud& cloud, CloudField field) noexcept {
        return field_ref(cloud, field);
    }

    std::span<const double> field_values(const GaussianCloud& cloud, CloudField field) noexcept {
        return field_ref(cloud, field);
    }

    bool ParamPartition::is_trainable(CloudField field) const noexcept {
        return std::find(trainable.begin(), trainable.end(), field) != trainable.end();
    }

    ParamPartition partition(const GaussianCloud& /*cloud*/, bool include_sh_rest) {
        ParamPartition p;
        p.trainable = {CloudField::ShDc};
        p.frozen = {CloudField::Positions, CloudField::Rotations, CloudField::LogScales, CloudField::OpacityLogits};
        if (include_sh_rest) {
            p.trainable.push_back(CloudField::ShRest);
        } else {
            p.frozen.push_back(CloudField::ShRest);
        }
        return p;
    }

    CloudGradient CloudGradient::zeros_like(const GaussianCloud& cloud) {
        CloudGradient g;
        g.positions.assign(cloud.positions.size(), 0.0);
        g.rotations.assign(cloud.rotations.size(), 0.0);
        g.log_scales.assign(cloud.log_scales.size(), 0.0);
        g.opacity_logits.assign(cloud.opacity_logits.size(), 0.0);
        g.sh_dc.assign(cloud.sh_dc.size(), 0.0);
        g.sh_rest.assign(cloud.sh_rest.size(), 0.0);
        return g;
    }

    std::span<double> CloudGradient::values(CloudField field) noexcept { return field_ref(*this, field); }

    std::span<const double> CloudGradient::values(CloudField field) const noexcept {
        return field_ref(*this, field);
    }

    CloudGradient& CloudGradient::operator+=(const CloudGradient& other) {
        for (CloudField f : kAllCloudFields) {
            auto dst = values(f);
            auto src = other.values(f);
            if (dst.size() != src.size()) {
                throw ArgumentError(fmt::format("gradient size mismatch on {}", field_name(f)));
            }
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i] += src[i];
            }
        }
        return *this;
    }

    CloudGradient& CloudGradient::operator*=(double k) noexcept {
        for (CloudField f : kAllCloudFields) {
            for (double& v : values(f)) {
                v *= k;
            }
        }
        return *this;
    }

    double CloudGradient::color_norm() const noexcept {
        double s = 0.0;
        for (double v : sh_dc) {
            s += v * v;
        }
        for (double v : sh_rest) {
            s += v * v;
        }
        return std::sqrt(s);
    }

    GeometrySnapshot GeometrySnapshot::of(const GaussianCloud& cloud) {
        return {cloud.positions, cloud.rotations, cloud.log_scales, cloud.opacity_logits};
    }

    bool GeometrySnapshot::bitwise_equal(const GaussianCloud& cloud) const noexcept {
        return same_bits(positions, cloud.positions) && same_bits(rotations, cloud.rotations) &&
               same_bits(log_scales, cloud.log_scales) && same_bits(opacity_logits, cloud.opacity_logits);
    }

} // namespace gsstyle
