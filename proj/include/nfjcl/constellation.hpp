#pragma once

#include <cstdint>
#include <vector>

#include "nfjcl/geometry.hpp"
#include "nfjcl/types.hpp"

namespace nfjcl {

/// Unit-modulus alphabet with a Gray bit labelling. Symbols are stored in
/// ascending phase order so neighbouring indices are neighbouring points.
class Constellation {
public:
    static Constellation make(ConstellationId id);

    std::size_t size() const { return symbols_.size(); }
    int bits_per_symbol() const { return bits_per_symbol_; }
    const std::vector<Complex>& symbols() const { return symbols_; }
    Complex symbol(std::size_t index) const { return symbols_.at(index); }
    Complex reference() const { return symbols_.front(); }

    /// MSB-first label of symbol `index`.
    const std::vector<std::uint8_t>& bits(std::size_t index) const { return labels_.at(index); }
    std::size_t index_of_bits(const std::uint8_t* bits) const;

    /// Minimum-distance projection; ties resolve to the lower index.
    std::size_t nearest_index(Complex value) const;

private:
    Constellation(std::vector<Complex> symbols, std::vector<std::vector<std::uint8_t>> labels);

    std::vector<Complex> symbols_;
    std::vector<std::vector<std::uint8_t>> labels_;
    int bits_per_symbol_ = 0;
};

}  // namespace nfjcl
