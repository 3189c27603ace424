#pragma once

#include "glucosindy/timeseries.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace glucosindy {

enum class DiffScheme { forward, central, smoothed };

/// How time derivatives are estimated. window and polyorder only apply to
/// the smoothed (local least-squares polynomial) scheme.
struct DerivativeSpec {
    DiffScheme scheme = DiffScheme::smoothed;
    int window = 7;
    int polyorder = 3;

    /// Throws InvalidArgument when window is not odd and >= 5, or polyorder
    /// is outside [2, window - 1].
    void validate() const;
    /// Shortest series the scheme accepts.
    [[nodiscard]] std::size_t min_length() const;
};

/// Derivative of `series` in units per minute, on the same grid.
///
/// forward: (x[i+1] - x[i]) / h, backward at the last sample.
/// central: (x[i+1] - x[i-1]) / 2h inside, one-sided 2-point at both ends.
/// smoothed: least-squares polynomial of degree polyorder over `window`
///   samples, differentiated analytically at the sample. The window is
///   centred where possible and shifted inward near the ends.
UniformSeries differentiate(const UniformSeries& series, const DerivativeSpec& spec);

/// Differentiates each segment independently so that no stencil crosses a
/// gap. Samples outside the used segments are NaN. Segments shorter than the
/// stencil support are skipped and reported in `skipped` when non-null.
UniformSeries differentiate_segments(const UniformSeries& series, std::span<const IndexRange> segments,
                                     const DerivativeSpec& spec, std::vector<IndexRange>* skipped = nullptr);

}  // namespace glucosindy
