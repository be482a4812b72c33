#include "drls/comms.hpp"

#include "drls/linalg.hpp"

#include <algorithm>
#include <string>

namespace drls {

namespace {

std::vector<std::vector<NodeId>> links_from_model(const NetworkModel& model) {
    const std::size_t N = model.node_count();
    std::vector<std::vector<NodeId>> links(N);
    for (NodeId i = 0; i < N; ++i) {
        for (NodeId j = 0; j < N; ++j) {
            if (i == j || model.pi(i, j) != 0.0 || model.pi(j, i) != 0.0) {
                links[i].push_back(j);
            }
        }
    }
    return links;
}

}  // namespace

RoundBus::RoundBus(const NetworkModel& model, long first_round) : RoundBus(links_from_model(model), first_round) {}

RoundBus::RoundBus(std::vector<std::vector<NodeId>> links, long first_round)
    : links_(std::move(links)), round_(first_round) {
    const std::size_t N = links_.size();
    for (NodeId i = 0; i < N; ++i) {
        auto& l = links_[i];
        if (std::find(l.begin(), l.end(), i) == l.end()) {
            l.push_back(i);
        }
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        for (NodeId j : l) {
            if (j >= N) {
                throw ProtocolError("link to unknown node " + std::to_string(j + 1));
            }
        }
    }
    for (NodeId i = 0; i < N; ++i) {
        for (NodeId j : links_[i]) {
            if (!std::binary_search(links_[j].begin(), links_[j].end(), i)) {
                throw ProtocolError("links must be symmetric");
            }
        }
    }
    mailboxes_.resize(N);
    published_.assign(N, false);
    collected_.assign(N, false);
}

void RoundBus::publish(InfoPackage pkg) {
    std::lock_guard lock(mu_);
    if (pkg.sender >= links_.size()) {
        throw ProtocolError("publish from unknown node " + std::to_string(pkg.sender + 1));
    }
    if (pkg.k != round_) {
        throw RoundMismatchError("package for step " + std::to_string(pkg.k) + " published in round " +
                                 std::to_string(round_));
    }
    if (published_[pkg.sender]) {
        throw ProtocolError("node " + std::to_string(pkg.sender + 1) + " published twice in round " +
                            std::to_string(round_));
    }
    if (pkg.P.rows() != pkg.P.cols() || pkg.P.rows() != pkg.x_hat.size() ||
        (pkg.P - pkg.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 || !linalg::is_spd(pkg.P)) {
        throw ProtocolError("package from node " + std::to_string(pkg.sender + 1) +
                            " carries a non-symmetric or indefinite P");
    }
    published_[pkg.sender] = true;
    ++publish_count_;
    for (NodeId j : links_[pkg.sender]) {
        mailboxes_[j].push_back(pkg);
        ++delivered_;
    }
}

std::vector<InfoPackage> RoundBus::collect(NodeId i) {
    std::lock_guard lock(mu_);
    if (i >= links_.size()) {
        throw ProtocolError("collect for unknown node " + std::to_string(i + 1));
    }
    if (publish_count_ != links_.size()) {
        throw NotReadyError("round " + std::to_string(round_) + " barrier not reached (" +
                            std::to_string(publish_count_) + "/" + std::to_string(links_.size()) +
                            " published)");
    }
    collected_[i] = true;
    auto out = mailboxes_[i];
    std::sort(out.begin(), out.end(),
              [](const InfoPackage& l, const InfoPackage& r) { return l.sender < r.sender; });
    return out;
}

long RoundBus::advance_round() {
    std::lock_guard lock(mu_);
    for (NodeId i = 0; i < links_.size(); ++i) {
        if (!published_[i]) {
            throw ProtocolError("node " + std::to_string(i + 1) + " has not published in round " +
                                std::to_string(round_));
        }
        if (!collected_[i]) {
            throw ProtocolError("node " + std::to_string(i + 1) + " has not collected in round " +
                                std::to_string(round_));
        }
    }
    for (auto& m : mailboxes_) {
        m.clear();
    }
    std::fill(published_.begin(), published_.end(), false);
    std::fill(collected_.begin(), collected_.end(), false);
    publish_count_ = 0;
    delivered_ = 0;
    return ++round_;
}

long RoundBus::round() const {
    std::lock_guard lock(mu_);
    return round_;
}

std::size_t RoundBus::delivered_this_round() const {
    std::lock_guard lock(mu_);
    return delivered_;
}

}  // namespace drls
