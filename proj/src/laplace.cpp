#include "aads/laplace.hpp"

#include "aads/errors.hpp"

#include <algorithm>
#include <deque>
#include <numbers>
#include <string>

namespace aads {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

// Breadth-first fill from the known set: each unknown pixel starts as the mean of
// already-settled neighbours. Returns false if some unknown pixel is unreachable.
bool seed_unknowns(Raster<double>& values, const Mask& unknown)
{
    const int w = values.width();
    const int h = values.height();
    Mask settled(w, h, 0);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!unknown(x, y))
                settled(x, y) = 1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!unknown(x, y))
                continue;
            for (int k = 0; k < 4; ++k) {
                const int nx = x + kDx[k];
                const int ny = y + kDy[k];
                if (values.contains(nx, ny) && !unknown(nx, ny)) {
                    queue.emplace_back(x, y);
                    break;
                }
            }
        }
    }
    Mask queued(w, h, 0);
    for (auto [x, y] : queue)
        queued(x, y) = 1;
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        double sum = 0.0;
        int n = 0;
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx[k];
            const int ny = y + kDy[k];
            if (!values.contains(nx, ny))
                continue;
            if (settled(nx, ny)) {
                sum += values(nx, ny);
                ++n;
            } else if (!queued(nx, ny)) {
                queued(nx, ny) = 1;
                queue.emplace_back(nx, ny);
            }
        }
        values(x, y) = n > 0 ? sum / n : 0.0;
        settled(x, y) = 1;
    }
    for (std::size_t i = 0; i < unknown.size(); ++i)
        if (unknown[i] && !settled[i])
            return false;
    return true;
}

} // namespace

double laplace_residual(const Raster<double>& values, const Mask& unknown, const Raster<double>* rhs)
{
    double worst = 0.0;
    for (int y = 0; y < values.height(); ++y) {
        for (int x = 0; x < values.width(); ++x) {
            if (!unknown(x, y))
                continue;
            double sum = rhs ? (*rhs)(x, y) : 0.0;
            int deg = 0;
            for (int k = 0; k < 4; ++k) {
                const int nx = x + kDx[k];
                const int ny = y + kDy[k];
                if (values.contains(nx, ny)) {
                    sum += values(nx, ny);
                    ++deg;
                }
            }
            worst = std::max(worst, std::abs(sum - deg * values(x, y)));
        }
    }
    return worst;
}

LaplaceReport solve_laplace(Raster<double>& values, const Mask& unknown, const LaplaceOptions& options,
                            const Raster<double>* rhs)
{
    if (!values.same_shape(unknown) || (rhs && !rhs->same_shape(values)))
        throw std::invalid_argument("solve_laplace: raster shapes differ");
    LaplaceReport report;
    int x0 = values.width();
    int y0 = values.height();
    int x1 = -1;
    int y1 = -1;
    for (int y = 0; y < values.height(); ++y)
        for (int x = 0; x < values.width(); ++x)
            if (unknown(x, y)) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (x1 < 0)
        return report;
    if (!seed_unknowns(values, unknown))
        throw NumericalError("Laplace region has no fixed boundary value");

    const int extent = std::max(x1 - x0 + 1, y1 - y0 + 1);
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / (extent + 1)));

    report.max_residual = laplace_residual(values, unknown, rhs);
    while (report.max_residual > options.tolerance) {
        if (report.iterations >= options.max_iterations)
            throw NumericalError("Laplace solve stalled at residual " + std::to_string(report.max_residual) +
                                 " after " + std::to_string(report.iterations) + " sweeps");
        for (int colour = 0; colour < 2; ++colour) {
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0 + ((x0 + y + colour) & 1); x <= x1; x += 2) {
                    if (!unknown(x, y))
                        continue;
                    double sum = rhs ? (*rhs)(x, y) : 0.0;
                    int deg = 0;
                    for (int k = 0; k < 4; ++k) {
                        const int nx = x + kDx[k];
                        const int ny = y + kDy[k];
                        if (values.contains(nx, ny)) {
                            sum += values(nx, ny);
                            ++deg;
                        }
                    }
                    if (deg == 0)
                        continue;
                    double& u = values(x, y);
                    u += omega * (sum / deg - u);
                }
            }
        }
        ++report.iterations;
        report.max_residual = laplace_residual(values, unknown, rhs);
    }
    return report;
}

Raster<int> connected_components(const Mask& mask, int& count)
{
    Raster<int> labels(mask.width(), mask.height(), 0);
    count = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y) || labels(x, y))
                continue;
            ++count;
            labels(x, y) = count;
            stack.emplace_back(x, y);
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int k = 0; k < 4; ++k) {
                    const int nx = cx + kDx[k];
                    const int ny = cy + kDy[k];
                    if (mask.contains(nx, ny) && mask(nx, ny) && !labels(nx, ny)) {
                        labels(nx, ny) = count;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
        }
    }
    return labels;
}

} // namespace aads
