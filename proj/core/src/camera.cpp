#include "gsstyle/camera.hpp"

#include "gsstyle/errors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gsstyle {

    namespace {

        Eigen::Matrix3d rotation_block(const Mat4& m) {
            Eigen::Matrix3d r;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    r(i, j) = m[static_cast<std::size_t>(i * 4 + j)];
                }
            }
            return r;
        }

        Eigen::Vector3d to_eigen(const Vec3& v) { return {v[0], v[1], v[2]}; }

    } // namespace

    void CameraView::validate() const {
        if (!(fx > 0.0) || !(fy > 0.0)) {
            throw ArgumentError(fmt::format("camera '{}': focal lengths must be positive (fx={}, fy={})", name, fx, fy));
        }
        if (width < 0 || height < 0) {
            throw ArgumentError(fmt::format("camera '{}': negative image size", name));
        }
        const Eigen::Matrix3d r = rotation_block(world_to_camera);
        const double err = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
        if (err > 1e-6) {
            throw ArgumentError(fmt::format("camera '{}': rotation block is not orthonormal (error {:.3g})", name, err));
        }
    }

    Vec3 CameraView::to_camera(const Vec3& p) const noexcept {
        const auto& m = world_to_camera;
        return {m[0] * p[0] + m[1] * p[1] + m[2] * p[2] + m[3],
                m[4] * p[0] + m[5] * p[1] + m[6] * p[2] + m[7],
                m[8] * p[0] + m[9] * p[1] + m[10] * p[2] + m[11]};
    }

    Vec3 CameraView::center() const noexcept {
        const Eigen::Matrix3d r = rotation_block(world_to_camera);
        const Eigen::Vector3d t(world_to_camera[3], world_to_camera[7], world_to_camera[11]);
        const Eigen::Vector3d c = -r.transpose() * t;
        return {c.x(), c.y(), c.z()};
    }

    CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height, double fov_x) {
        const Eigen::Vector3d e = to_eigen(eye);
        const Eigen::Vector3d forward = (to_eigen(target) - e).normalized();
        const Eigen::Vector3d right = forward.cross(to_eigen(up)).normalized();
        const Eigen::Vector3d down = forward.cross(right);

        CameraView view;
        view.width = width;
        view.height = height;
        view.fx = 0.5 * width / std::tan(0.5 * fov_x);
        view.fy = view.fx;
        view.cx = 0.5 * width;
        view.cy = 0.5 * height;
        const Eigen::Vector3d rows[3] = {right, down, forward};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                view.world_to_camera[static_cast<std::size_t>(i * 4 + j)] = rows[i][j];
            }
            view.world_to_camera[static_cast<std::size_t>(i * 4 + 3)] = -rows[i].dot(e);
        }
        view.world_to_camera[12] = 0.0;
        view.world_to_camera[13] = 0.0;
        view.world_to_camera[14] = 0.0;
        view.world_to_camera[15] = 1.0;
        return view;
    }

    std::vector<CameraView> orbit_ring(int count, const Vec3& target, double radius, double height_offset,
                                       int width, int height, double fov_x) {
        std::vector<CameraView> views;
        views.reserve(static_cast<std::size_t>(std::max(count, 0)));
        for (int i = 0; i < count; ++i) {
            const double phi = 2.0 * M_PI * i / count;
            const Vec3 eye = {target[0] + radius * std::sin(phi), target[1] + height_offset,
                              target[2] - radius * std::cos(phi)};
            CameraView v = look_at(eye, target, {0.0, 1.0, 0.0}, width, height, fov_x);
            v.azimuth_index = i;
            v.name = fmt::format("view_{:03d}", i);
            views.push_back(std::move(v));
        }
        return views;
    }

    std::vector<CameraView> load_cameras(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw IoError(fmt::format("cannot open camera file '{}'", path.string()));
        }
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ArgumentError(fmt::format("camera file '{}' is not valid JSON: {}", path.string(), e.what()));
        }
        const nlohmann::json& list = doc.is_object() && doc.contains("cameras") ? doc["cameras"] : doc;
        if (!list.is_array()) {
            throw ArgumentError(fmt::format("camera file '{}' must hold a JSON array", path.string()));
        }

        std::vector<CameraView> views;
        int position = 0;
        for (const auto& entry : list) {
            try {
                CameraView v;
                v.width = entry.at("width").get<int>();
                v.height = entry.at("height").get<int>();
                v.fx = entry.at("fx").get<double>();
                v.fy = entry.at("fy").get<double>();
                v.cx = entry.value("cx", 0.5 * v.width);
                v.cy = entry.value("cy", 0.5 * v.height);
                v.azimuth_index = entry.value("azimuth_index", position);
                if (entry.contains("name")) {
                    v.name = entry["name"].get<std::string>();
                } else if (entry.contains("img_name")) {
                    v.name = entry["img_name"].get<std::string>();
                } else {
                    v.name = fmt::format("view_{:03d}", position);
                }

                if (entry.contains("world_to_camera")) {
                    const auto m = entry["world_to_camera"].get<std::vector<double>>();
                    if (m.size() != 16) {
                        throw ArgumentError("world_to_camera must have 16 entries");
                    }
                    std::copy(m.begin(), m.end(), v.world_to_camera.begin());
                } else {
                    const auto pos = entry.at("position").get<std::vector<double>>();
                    const auto rot = entry.at("rotation").get<std::vector<std::vector<double>>>();
                    if (pos.size() != 3 || rot.size() != 3) {
                        throw ArgumentError("position/rotation must be 3-vector / 3x3");
                    }
                    // rotation is camera-to-world; world_to_camera = [R^T | -R^T p]
                    for (int i = 0; i < 3; ++i) {
                        double t = 0.0;
                        for (int j = 0; j < 3; ++j) {
                            const double rji = rot.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(i));
                            v.world_to_camera[static_cast<std::size_t>(i * 4 + j)] = rji;
                            t -= rji * pos[static_cast<std::size_t>(j)];
                        }
                        v.world_to_camera[static_cast<std::size_t>(i * 4 + 3)] = t;
                    }
                }
                v.validate();
                views.push_back(std::move(v));
            } catch (const nlohmann::json::exception& e) {
                throw ArgumentError(fmt::format("camera {} in '{}': {}", position, path.string(), e.what()));
            }
            ++position;
        }
        return views;
    }

    void save_cameras(const std::vector<CameraView>& views, const std::filesystem::path& path) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& v : views) {
            list.push_back({{"name", v.name},
                            {"width", v.width},
                            {"height", v.height},
                            {"fx", v.fx},
                            {"fy", v.fy},
                            {"cx", v.cx},
                            {"cy", v.cy},
                            {"azimuth_index", v.azimuth_index},
                            {"world_to_camera", v.world_to_camera}});
        }
        std::ofstream out(path);
        if (!out) {
            throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
        }
        out << list.dump(2) << '\n';
    }

} // namespace gsstyle
