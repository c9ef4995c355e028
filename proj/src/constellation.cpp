#include "nfjcl/constellation.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace nfjcl {

Constellation::Constellation(std::vector<Complex> symbols, std::vector<std::vector<std::uint8_t>> labels)
    : symbols_(std::move(symbols)), labels_(std::move(labels)) {
    if (symbols_.empty() || !std::has_single_bit(symbols_.size()) || labels_.size() != symbols_.size()) {
        throw ModelError("constellation size must be a power of two with one label per symbol");
    }
    bits_per_symbol_ = std::countr_zero(symbols_.size());
    for (const auto& s : symbols_) {
        if (std::abs(std::abs(s) - 1.0) > 1e-12) throw ModelError("constellation symbols must be unit modulus");
    }
}

Constellation Constellation::make(ConstellationId id) {
    switch (id) {
        case ConstellationId::Pi4Dqpsk: {
            // e^{j pi/4}, e^{j 3pi/4}, e^{j 5pi/4}, e^{j 7pi/4} <- 00, 01, 11, 10
            std::vector<Complex> symbols;
            for (int i = 0; i < 4; ++i) symbols.push_back(std::polar(1.0, kPi / 4.0 + i * kPi / 2.0));
            return Constellation(std::move(symbols), {{0, 0}, {0, 1}, {1, 1}, {1, 0}});
        }
    }
    throw ConfigError("unsupported constellation");
}

std::size_t Constellation::index_of_bits(const std::uint8_t* bits) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        bool match = true;
        for (int b = 0; b < bits_per_symbol_; ++b) {
            if ((labels_[i][static_cast<std::size_t>(b)] != 0) != (bits[b] != 0)) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    throw ModelError("bit pattern has no symbol");
}

std::size_t Constellation::nearest_index(Complex value) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        const double d = std::norm(value - symbols_[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace nfjcl
