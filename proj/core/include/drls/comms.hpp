#pragma once

// Synchronous-round exchange of (x̂, P) packages between neighboring nodes.
//
// A communication link joins i and j whenever π_ij ≠ 0 or π_ji ≠ 0; every
// node is linked to itself. Within a round each node publishes once, then
// (after all N have published) each node collects the packages of its links,
// then the round advances.

#include "drls/net_model.hpp"
#include "drls/types.hpp"

#include <mutex>
#include <vector>

namespace drls {

struct InfoPackage {
    NodeId sender = 0;
    long k = 0;
    Vec x_hat;
    Mat P;
};

class RoundBus {
public:
    explicit RoundBus(const NetworkModel& model, long first_round = 0);
    /// Explicit symmetric link lists (self links are added if missing).
    explicit RoundBus(std::vector<std::vector<NodeId>> links, long first_round = 0);

    RoundBus(const RoundBus&) = delete;
    RoundBus& operator=(const RoundBus&) = delete;

    /// Thread-safe. Throws RoundMismatchError for a stale or future k,
    /// ProtocolError for a second publish by the same sender or a malformed P.
    void publish(InfoPackage pkg);

    /// Packages addressed to `i`, ordered by sender. Throws NotReadyError
    /// before every node has published this round.
    [[nodiscard]] std::vector<InfoPackage> collect(NodeId i);

    /// Clears mailboxes and returns the new round index. Throws ProtocolError
    /// while a node has not published or not collected.
    long advance_round();

    [[nodiscard]] long round() const;
    [[nodiscard]] std::size_t node_count() const noexcept { return links_.size(); }
    [[nodiscard]] const std::vector<NodeId>& links(NodeId i) const { return links_.at(i); }
    /// Packages delivered into mailboxes during the current round.
    [[nodiscard]] std::size_t delivered_this_round() const;

private:
    std::vector<std::vector<NodeId>> links_;
    std::vector<std::vector<InfoPackage>> mailboxes_;
    std::vector<bool> published_;
    std::vector<bool> collected_;
    std::size_t publish_count_ = 0;
    std::size_t delivered_ = 0;
    long round_ = 0;
    mutable std::mutex mu_;
};

}  // namespace drls
