#ifndef PLAX_CORRESPONDENCE_HPP
#define PLAX_CORRESPONDENCE_HPP

#include <vector>

#include "plax/geometry.hpp"

namespace plax {

/// A pixel match between the warped-from frame b and the reference frame a.
/// is_static comes from an external mask; dynamic matches are excluded from
/// every estimation step.
struct Correspondence {
    Vec2 p_b = Vec2::Zero();
    Vec2 p_a = Vec2::Zero();
    bool is_static = true;
};

struct CorrespondenceSet {
    std::vector<Correspondence> items;
    int width = 0;
    int height = 0;

    std::size_t size() const { return items.size(); }
};

} // namespace plax

#endif
