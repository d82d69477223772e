#pragma once

#include <span>
#include <string>
#include <vector>

#include "lrukit/types.hpp"

namespace lrukit {

/// Optimizer group. Recurrent tensors (eigenvalue parameters, B, gamma) train
/// with a reduced learning rate and no weight decay.
enum class ParamGroup { recurrent, general };

/// Named, mutable window onto one parameter tensor.
struct ParamView {
    std::string name;
    std::span<double> values;
    ParamGroup group = ParamGroup::general;
    std::vector<std::size_t> shape;
};

inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> as_span(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

inline ParamView make_view(std::string name, Vector& v, ParamGroup group) {
    return {std::move(name), as_span(v), group, {static_cast<std::size_t>(v.size())}};
}
inline ParamView make_view(std::string name, RowMatrix& m, ParamGroup group) {
    return {std::move(name), as_span(m), group,
            {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}};
}

/// Total scalar count across views.
std::size_t total_size(const std::vector<ParamView>& views);

}  // namespace lrukit
