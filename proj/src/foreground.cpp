#include "vand/foreground.hpp"

#include <array>
#include <stack>

namespace vand::foreground {

ProposalSet filter_proposals(const ProposalSet& proposals, const BinaryMask& salient, double coverage_threshold) {
    if (!(coverage_threshold > 0.0 && coverage_threshold <= 1.0)) {
        throw ContractError("coverage_threshold must lie in (0,1]");
    }
    ProposalSet kept;
    for (const auto& p : proposals) {
        if (!p.same_shape(salient)) throw ContractError("filter_proposals: proposal and salient mask dimensions differ");
        const std::size_t area = popcount(p);
        if (area == 0) continue;
        const std::size_t covered = intersection_count(p, salient);
        if (static_cast<double>(covered) >= coverage_threshold * static_cast<double>(area)) kept.push_back(p);
    }
    return kept;
}

BinaryMask merge_foreground(const ProposalSet& kept, Dims dims) {
    BinaryMask out(dims.height, dims.width, 0);
    auto dst = out.values();
    for (const auto& p : kept) {
        if (!p.same_shape(out)) throw ContractError("merge_foreground: proposal dimensions differ from image");
        auto src = p.values();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<std::uint8_t>(dst[i] | (src[i] ? 1 : 0));
    }
    return out;
}

std::optional<BBox> tight_bbox(const BinaryMask& mask) {
    int x_min = mask.width(), y_min = mask.height(), x_max = -1, y_max = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(y, x)) continue;
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max < 0) return std::nullopt;
    return BBox{x_min, y_min, x_max - x_min + 1, y_max - y_min + 1};
}

std::vector<ForegroundComponent> connected_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8) throw ContractError("connectivity must be 4 or 8");
    static constexpr std::array<std::array<int, 2>, 8> kOffsets{{
        {0, -1}, {-1, 0}, {1, 0}, {0, 1}, {-1, -1}, {1, -1}, {-1, 1}, {1, 1}}};
    const int n_offsets = connectivity == 4 ? 4 : 8;

    Raster<int> labels(mask.height(), mask.width(), -1);
    std::vector<ForegroundComponent> components;
    std::stack<std::pair<int, int>> todo;

    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(y, x) || labels(y, x) >= 0) continue;
            const int id = static_cast<int>(components.size());
            ForegroundComponent comp;
            comp.id = id;
            comp.mask = BinaryMask(mask.height(), mask.width(), 0);
            int x_min = x, x_max = x, y_min = y, y_max = y;

            labels(y, x) = id;
            todo.emplace(y, x);
            while (!todo.empty()) {
                auto [cy, cx] = todo.top();
                todo.pop();
                comp.mask(cy, cx) = 1;
                x_min = std::min(x_min, cx);
                x_max = std::max(x_max, cx);
                y_min = std::min(y_min, cy);
                y_max = std::max(y_max, cy);
                for (int k = 0; k < n_offsets; ++k) {
                    const int ny = cy + kOffsets[k][1];
                    const int nx = cx + kOffsets[k][0];
                    if (ny < 0 || nx < 0 || ny >= mask.height() || nx >= mask.width()) continue;
                    if (!mask(ny, nx) || labels(ny, nx) >= 0) continue;
                    labels(ny, nx) = id;
                    todo.emplace(ny, nx);
                }
            }
            comp.bbox = BBox{x_min, y_min, x_max - x_min + 1, y_max - y_min + 1};
            components.push_back(std::move(comp));
        }
    }
    return components;
}

int count_parts(const ForegroundComponent& component, const ProposalSet& proposals, double overlap_fraction) {
    int count = 0;
    for (const auto& p : proposals) {
        if (!p.same_shape(component.mask)) throw ContractError("count_parts: proposal dimensions differ from component");
        const std::size_t area = popcount(p);
        if (area == 0) continue;
        const std::size_t inside = intersection_count(p, component.mask);
        if (static_cast<double>(inside) >= overlap_fraction * static_cast<double>(area)) ++count;
    }
    return count;
}

std::vector<ForegroundComponent> extract_components(const ProposalSet& proposals, const BinaryMask& salient,
                                                    const PipelineConfig& config) {
    const Dims dims = dims_of(salient);
    ProposalSet kept = filter_proposals(proposals, salient, config.coverage_threshold);
    BinaryMask fg = merge_foreground(kept, dims);
    auto components = connected_components(fg, config.connectivity);

    if (components.empty()) {
        ForegroundComponent whole;
        whole.id = 0;
        whole.mask = BinaryMask(dims.height, dims.width, 1);
        whole.bbox = BBox{0, 0, dims.width, dims.height};
        whole.part_count = count_parts(whole, proposals, config.proposal_overlap_fraction);
        components.push_back(std::move(whole));
        return components;
    }
    for (auto& c : components) c.part_count = count_parts(c, kept, config.proposal_overlap_fraction);
    return components;
}

}  // namespace vand::foreground
