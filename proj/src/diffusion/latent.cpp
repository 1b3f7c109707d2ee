#include "mindcube/diffusion/latent.hpp"

#include <algorithm>

namespace mindcube::diffusion {

const char* to_string(DiffusionErrc code) {
    switch (code) {
        case DiffusionErrc::InvalidSteps: return "InvalidSteps";
        case DiffusionErrc::ShapeMismatch: return "ShapeMismatch";
        case DiffusionErrc::PrefixTooLong: return "PrefixTooLong";
        case DiffusionErrc::NonFiniteDetected: return "NonFiniteDetected";
        case DiffusionErrc::SingularStep: return "SingularStep";
        case DiffusionErrc::InvalidArgument: return "InvalidArgument";
        case DiffusionErrc::BadLatentFile: return "BadLatentFile";
    }
    return "DiffusionError";
}

LatentSequence LatentSequence::slice(std::size_t first, std::size_t count) const {
    if (first + count > length()) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "slice out of range");
    }
    LatentSequence out(count);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * kDim), count * kDim,
                out.data_.begin());
    return out;
}

LatentSequence LatentSequence::tail(std::size_t count) const {
    if (count > length()) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "tail longer than sequence");
    }
    return slice(length() - count, count);
}

}  // namespace mindcube::diffusion
