#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace autoset {

// Dense row-major tensor of 64-bit floats.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> shape_, double fill = 0.0)
        : shape(std::move(shape_)) {
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension " + std::to_string(d));
        }
        data.assign(numel_of(shape), fill);
    }

    Tensor(std::vector<int> shape_, std::vector<double> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (numel_of(shape) != data.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) n *= static_cast<std::size_t>(d);
        return n;
    }

    std::size_t numel() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }
    double scalar() const {
        if (!is_scalar()) throw std::runtime_error("Tensor: scalar() on non-scalar");
        return data[0];
    }

    // 2-D accessors (rows x cols).
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }

    // 3-D accessors.
    double& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace autoset
