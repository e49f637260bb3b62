#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "otfs/modem.hpp"
#include "otfs/rng.hpp"

namespace otfs {

// One propagation path: delay tau = delay * T / L, Doppler nu = doppler * delta_f / K.
struct ChannelPath {
    Complex gain;
    int delay = 0;
    int doppler = 0;
};

struct DdChannel {
    std::vector<ChannelPath> paths;
    int l_max = 0;
    int k_max = 0;

    /// Throws std::invalid_argument when a path index falls outside
    /// [0, l_max] x [-k_max, k_max].
    void validate() const;
};

/// Random channel with `paths` paths. The first path is the zero-delay
/// path; the rest draw delays uniformly from {1..l_max} with repetition.
/// Every Doppler index is uniform on {-k_max..k_max} and every gain is
/// CN(0, 1/paths).
DdChannel sample_channel(Rng& rng, int paths, int l_max, int k_max);

/// Circular delay by `shift` samples: row n carries a one at column (n - shift) mod n.
CMatrix delay_shift_matrix(int size, int shift);

/// diag(exp(j 2 pi doppler m / size)), m = 0..size-1.
CMatrix doppler_matrix(int size, int doppler);

/// Time-domain channel matrix, the sum over paths of h_i I(l_i) Delta(k_i).
CMatrix build_time_channel(const OtfsGeometry& geom, const DdChannel& ch);

/// Received samples after CP removal, evaluated path by path from the
/// scalar input/output relation, plus CN(0, sigma2) noise when sigma2 > 0.
CVector apply_channel_scalar(const OtfsGeometry& geom, const DdChannel& ch, const CVector& s, Rng& rng,
                             double sigma2);

/// Line-based record: a header `# paths=P l_max=L k_max=K` then one
/// `gain_re gain_im l k` line per path.
std::string format_channel(const DdChannel& ch);
DdChannel parse_channel(std::string_view text);

}  // namespace otfs
