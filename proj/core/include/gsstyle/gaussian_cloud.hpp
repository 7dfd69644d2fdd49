#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gsstyle {

    /// Number of higher-order SH coefficients per color channel for degree L: (L+1)^2 - 1.
    constexpr int sh_rest_per_channel(int degree) noexcept { return (degree + 1) * (degree + 1) - 1; }

    /// A 3D Gaussian scene. Arrays are flat, Gaussian-major. Values are stored raw
    /// (log scales, opacity logits); activations are applied by the renderer.
    ///
    /// sh_rest follows the on-disk channel-major order: for Gaussian i the 3*K values are
    /// [R_1..R_K, G_1..G_K, B_1..B_K] with K = sh_rest_per_channel(sh_degree).
    struct GaussianCloud {
        std::vector<double> positions;      // N*3
        std::vector<double> rotations;      // N*4, (w, x, y, z)
        std::vector<double> log_scales;     // N*3
        std::vector<double> opacity_logits; // N
        std::vector<double> sh_dc;          // N*3
        std::vector<double> sh_rest;        // N*3*K
        int sh_degree = 0;

        std::size_t size() const noexcept { return opacity_logits.size(); }
        bool empty() const noexcept { return opacity_logits.empty(); }
        int rest_per_channel() const noexcept { return sh_rest_per_channel(sh_degree); }

        /// Allocates N zero-initialized Gaussians with identity rotations.
        static GaussianCloud with_size(std::size_t n, int sh_degree);

        /// Throws ArgumentError if any array length or the quaternion norms are inconsistent.
        void validate() const;

        void normalize_rotations();

        friend bool operator==(const GaussianCloud&, const GaussianCloud&) = default;
    };

    enum class CloudField {
        Positions,
        Rotations,
        LogScales,
        OpacityLogits,
        ShDc,
        ShRest
    };

    inline constexpr std::array<CloudField, 6> kAllCloudFields = {
        CloudField::Positions, CloudField::Rotations, CloudField::LogScales,
        CloudField::OpacityLogits, CloudField::ShDc, CloudField::ShRest};

    std::string_view field_name(CloudField field) noexcept;

    std::span<double> field_values(GaussianCloud& cloud, CloudField field) noexcept;
    std::span<const double> field_values(const GaussianCloud& cloud, CloudField field) noexcept;

    /// Trainable/frozen split of the cloud fields. Colors train, geometry stays frozen.
    struct ParamPartition {
        std::vector<CloudField> trainable;
        std::vector<CloudField> frozen;

        bool is_trainable(CloudField field) const noexcept;
    };

    /// Color-only partition. With include_sh_rest = false only the DC term trains.
    ParamPartition partition(const GaussianCloud& cloud, bool include_sh_rest = true);

    /// Gradient with the same layout as GaussianCloud. Geometry entries exist so callers can
    /// check they stay zero; nothing in this library ever writes to them.
    struct CloudGradient {
        std::vector<double> positions;
        std::vector<double> rotations;
        std::vector<double> log_scales;
        std::vector<double> opacity_logits;
        std::vector<double> sh_dc;
        std::vector<double> sh_rest;

        static CloudGradient zeros_like(const GaussianCloud& cloud);

        std::span<double> values(CloudField field) noexcept;
        std::span<const double> values(CloudField field) const noexcept;

        CloudGradient& operator+=(const CloudGradient& other);
        CloudGradient& operator*=(double k) noexcept;

        /// L2 norm over the color entries.
        double color_norm() const noexcept;
    };

    /// Snapshot of the frozen arrays; compared bitwise to check the geometry freeze.
    struct GeometrySnapshot {
        std::vector<double> positions;
        std::vector<double> rotations;
        std::vector<double> log_scales;
        std::vector<double> opacity_logits;

        static GeometrySnapshot of(const GaussianCloud& cloud);
        bool bitwise_equal(const GaussianCloud& cloud) const noexcept;
    };

} // namespace gsstyle
