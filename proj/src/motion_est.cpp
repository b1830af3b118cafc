#include "vqm/motion_est.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace vqm {

namespace {

void check_planes(const LumaPlane& prev, const LumaPlane& curr) {
    if (!prev.same_shape(curr)) throw ValidationError("motion search: plane dimensions differ");
    if (prev.rows < kBlockSize || prev.cols < kBlockSize)
        throw ValidationError("motion search: plane smaller than one 8x8 block");
}

long sad_block(const LumaPlane& prev, const LumaPlane& curr, int cy, int cx, int py, int px) {
    long acc = 0;
    for (int y = 0; y < kBlockSize; ++y) {
        const uint8_t* c = &curr.at(cy + y, cx);
        const uint8_t* p = &prev.at(py + y, px);
        for (int x = 0; x < kBlockSize; ++x) acc += std::abs(int(c[x]) - int(p[x]));
    }
    return acc;
}

struct Candidate {
    long sad = std::numeric_limits<long>::max();
    int dx = 0;
    int dy = 0;
    long mag2 = std::numeric_limits<long>::max();
    bool valid = false;
};

// Strictly-better comparison implementing the tie-break: lower SAD, then
// smaller magnitude; equal on both keeps the earlier candidate, so callers
// must enumerate in row-major order.
bool better(long sad, long mag2, const Candidate& best) {
    if (!best.valid) return true;
    if (sad != best.sad) return sad < best.sad;
    return mag2 < best.mag2;
}

bool in_bounds(const LumaPlane& p, int y, int x) {
    return y >= 0 && x >= 0 && y + kBlockSize <= p.rows && x + kBlockSize <= p.cols;
}

void try_candidate(const LumaPlane& prev, const LumaPlane& curr, int cy, int cx, int dy, int dx,
                   Candidate& best) {
    if (!in_bounds(prev, cy + dy, cx + dx)) return;
    const long mag2 = long(dx) * dx + long(dy) * dy;
    const long sad = sad_block(prev, curr, cy, cx, cy + dy, cx + dx);
    if (better(sad, mag2, best)) best = {sad, dx, dy, mag2, true};
}

MotionField make_grid(const LumaPlane& plane) {
    MotionField f;
    f.block_rows = plane.rows / kBlockSize;
    f.block_cols = plane.cols / kBlockSize;
    const size_t n = static_cast<size_t>(f.block_rows) * f.block_cols;
    f.dx.assign(n, 0);
    f.dy.assign(n, 0);
    f.magnitudes = RealField(f.block_rows, f.block_cols);
    return f;
}

int initial_step(int range) {
    int step = 1;
    while (step * 2 <= (range + 1) / 2) step *= 2;
    return step;
}

} // namespace

MotionField three_step_search(const LumaPlane& prev, const LumaPlane& curr, int search_range) {
    check_planes(prev, curr);
    if (search_range < 1) throw ValidationError("motion search range must be >= 1");
    MotionField field = make_grid(curr);
    for (int br = 0; br < field.block_rows; ++br) {
        for (int bc = 0; bc < field.block_cols; ++bc) {
            const int cy = br * kBlockSize, cx = bc * kBlockSize;
            int vy = 0, vx = 0;
            for (int step = initial_step(search_range); step >= 1; step /= 2) {
                Candidate best;
                for (int sy = -1; sy <= 1; ++sy)
                    for (int sx = -1; sx <= 1; ++sx) {
                        const int dy = vy + sy * step, dx = vx + sx * step;
                        if (std::abs(dy) > search_range || std::abs(dx) > search_range) continue;
                        try_candidate(prev, curr, cy, cx, dy, dx, best);
                    }
                vy = best.dy;
                vx = best.dx;
            }
            const int i = field.index(br, bc);
            field.dx[i] = vx;
            field.dy[i] = vy;
            field.magnitudes.at(br, bc) = std::sqrt(double(vx) * vx + double(vy) * vy);
        }
    }
    return field;
}

MotionField full_search(const LumaPlane& prev, const LumaPlane& curr, int search_range) {
    check_planes(prev, curr);
    if (search_range < 1) throw ValidationError("motion search range must be >= 1");
    MotionField field = make_grid(curr);
    for (int br = 0; br < field.block_rows; ++br) {
        for (int bc = 0; bc < field.block_cols; ++bc) {
            const int cy = br * kBlockSize, cx = bc * kBlockSize;
            Candidate best;
            for (int dy = -search_range; dy <= search_range; ++dy)
                for (int dx = -search_range; dx <= search_range; ++dx)
                    try_candidate(prev, curr, cy, cx, dy, dx, best);
            const int i = field.index(br, bc);
            field.dx[i] = best.dx;
            field.dy[i] = best.dy;
            field.magnitudes.at(br, bc) = std::sqrt(double(best.dx) * best.dx + double(best.dy) * best.dy);
        }
    }
    return field;
}

} // namespace vqm
