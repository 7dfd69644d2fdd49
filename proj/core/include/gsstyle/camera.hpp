#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace gsstyle {

    using Vec3 = std::array<double, 3>;
    using Mat4 = std::array<double, 16>; // row-major

    /// Pinhole camera. world_to_camera maps world points into a camera frame looking down +z,
    /// x right, y down (OpenCV convention, as in the 3DGS camera files).
    struct CameraView {
        std::string name;
        int width = 0;
        int height = 0;
        double fx = 0.0;
        double fy = 0.0;
        double cx = 0.0;
        double cy = 0.0;
        Mat4 world_to_camera = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
        int azimuth_index = 0; // position on the capture ring, used to order views

        /// Throws ArgumentError unless fx, fy > 0, size is nonnegative and the rotation block
        /// is orthonormal within 1e-6.
        void validate() const;

        Vec3 to_camera(const Vec3& world) const noexcept;
        Vec3 center() const noexcept;
    };

    /// Camera at `eye` looking at `target`; `up` is the world up direction.
    CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height, double fov_x_radians);

    /// `count` cameras on a horizontal circle around `target`, azimuth_index = ring position.
    std::vector<CameraView> orbit_ring(int count, const Vec3& target, double radius, double height_offset,
                                       int width, int height, double fov_x_radians);

    /// Camera list as JSON. Each entry is either
    ///   {name, width, height, fx, fy, [cx, cy], world_to_camera: [16 row-major], [azimuth_index]}
    /// or the reference 3DGS cameras.json form
    ///   {id, img_name, width, height, fx, fy, position: [3], rotation: [[3],[3],[3]]  (camera-to-world)}.
    /// Missing cx/cy default to the image center, missing azimuth_index to the list position.
    std::vector<CameraView> load_cameras(const std::filesystem::path& path);
    void save_cameras(const std::vector<CameraView>& views, const std::filesystem::path& path);

} // namespace gsstyle
