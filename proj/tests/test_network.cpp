#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cogcubes/agents.hpp"
#include "cogcubes/network.hpp"
#include "test_support.hpp"

using namespace cogcubes;

namespace {

template <typename Fn>
ErrorCode error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::IoError;
}

TopologyGraph with_cubes(std::initializer_list<int> ids) {
    TopologyGraph g;
    for (int id : ids) g.cubes[id] = make_cube_unit(id);
    return g;
}

void link(TopologyGraph& g, int a, Face f, int b) { g.links.insert(Link{{a, f}, {b, opposite(f)}}); }

} // namespace

TEST(Network, UnitsHaveUniqueFaceIds) {
    std::set<int> ids;
    for (int c = 0; c < 20; ++c)
        for (int f : make_cube_unit(c).face_ids) EXPECT_TRUE(ids.insert(f).second);
}

TEST(Attach, Examples) {
    TopologyGraph g;
    const auto r = attach(g, make_cube_unit(1), kBaseCubeId, Face::PosZ, 1.0);
    EXPECT_EQ(r.cell, (CubeCoord{0, 0, 1}));
    EXPECT_EQ(r.event.kind, NetEventKind::Connect);
    EXPECT_EQ(r.event.cell, (CubeCoord{0, 0, 1}));
    ASSERT_TRUE(r.event.host_face);
    EXPECT_EQ(r.event.host_face->face, Face::PosZ);
    EXPECT_EQ(*r.event.mating_face, Face::NegZ);
    EXPECT_EQ(r.graph.links.size(), 1u);

    EXPECT_EQ(error_of([&] { attach(r.graph, make_cube_unit(2), kBaseCubeId, Face::PosZ); }), ErrorCode::FaceOccupied);
    EXPECT_EQ(error_of([&] { attach(r.graph, make_cube_unit(2), 42, Face::PosX); }), ErrorCode::HostUnreachable);

    // (1,1,0) reached via base +X then +Y, and again via base +Y then +X
    CubeNetwork net(false);
    const int a = net.attach(kBaseCubeId, Face::PosX, 1);
    const int b = net.attach(kBaseCubeId, Face::PosY, 2);
    net.attach(a, Face::PosY, 3);
    EXPECT_EQ(error_of([&] { net.attach(b, Face::PosX, 4); }), ErrorCode::CellOccupied);
}

TEST(Attach, SnappingLinksEveryTouchingFace) {
    CubeNetwork net;
    const int a = net.attach(kBaseCubeId, Face::PosX, 1);
    const int b = net.attach(kBaseCubeId, Face::PosY, 2);
    const int c = net.attach(a, Face::PosY, 3); // also touches b
    EXPECT_TRUE(net.graph().linked_to({c, Face::NegX}));
    EXPECT_EQ(net.graph().linked_to({b, Face::PosX})->cube_id, c);
    EXPECT_EQ(net.shape().cells.size(), 4u);
}

TEST(Detach, Examples) {
    CubeNetwork net;
    const int a = net.attach(kBaseCubeId, Face::PosX, 1);
    const int b = net.attach(a, Face::PosX, 2);
    const int c = net.attach(b, Face::PosX, 3);
    {
        auto copy = net;
        const auto evs = copy.detach(c, 4);
        ASSERT_EQ(evs.size(), 1u);
        EXPECT_EQ(evs[0].cube_id, c);
    }
    const auto evs = net.detach(a, 4);
    ASSERT_EQ(evs.size(), 3u);
    EXPECT_EQ(evs[0].cube_id, c);
    EXPECT_EQ(evs[1].cube_id, b);
    EXPECT_EQ(evs[2].cube_id, a);
    EXPECT_EQ(broadcast_scan(net.graph()), std::vector<int>{kBaseCubeId});

    EXPECT_EQ(error_of([&] { net.detach(kBaseCubeId, 5); }), ErrorCode::BaseRemoval);
    EXPECT_EQ(error_of([&] { net.detach(99, 5); }), ErrorCode::UnknownCube);
}

TEST(Reconstruct, Examples) {
    auto g = with_cubes({1, 2});
    link(g, 0, Face::PosX, 1);
    link(g, 1, Face::PosX, 2);
    const auto shape = reconstruct_shape(g);
    EXPECT_EQ(shape.cells, (Polycube{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}));
    EXPECT_EQ(shape.cell_of.at(2), (CubeCoord{2, 0, 0}));

    auto bad = with_cubes({1, 2, 3, 4});
    link(bad, 0, Face::PosX, 1);
    link(bad, 0, Face::PosY, 2);
    link(bad, 1, Face::PosY, 3);
    link(bad, 2, Face::PosX, 4);
    EXPECT_EQ(error_of([&] { reconstruct_shape(bad); }), ErrorCode::Collision);

    EXPECT_EQ(reconstruct_shape(TopologyGraph{}).cells, Polycube{kOrigin});

    auto dangling = with_cubes({1});
    link(dangling, 1, Face::PosX, 7);
    link(dangling, 0, Face::PosX, 1);
    EXPECT_EQ(error_of([&] { reconstruct_shape(dangling); }), ErrorCode::DanglingLink);
}

TEST(Reconstruct, OrderIndependent) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const auto shape = oracle::random_polycube(rng, 2 + trial % 8);
        const auto net = build_network(shape);
        std::vector<Link> links(net.graph().links.begin(), net.graph().links.end());
        std::shuffle(links.begin(), links.end(), rng);
        TopologyGraph g;
        g.cubes = net.graph().cubes;
        for (const auto& l : links) g.links.insert(l);
        const auto a = reconstruct_shape(g);
        EXPECT_EQ(a.cells, shape);
        EXPECT_EQ(a.cell_of, net.shape().cell_of);
    }
}

TEST(BroadcastScan, Examples) {
    EXPECT_EQ(broadcast_scan(TopologyGraph{}), std::vector<int>{0});
    CubeNetwork net;
    const int a = net.attach(kBaseCubeId, Face::PosX, 1);
    const int b = net.attach(a, Face::PosX, 2);
    EXPECT_EQ(broadcast_scan(net.graph()), (std::vector<int>{0, a, b}));
    net.detach(a, 3);
    EXPECT_EQ(broadcast_scan(net.graph()), std::vector<int>{0});
}

TEST(RoundTrip, RandomBaseRootedPolycubes) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto shape = oracle::random_polycube(rng, 1 + trial % 6);
        for (bool snap : {false, true}) {
            const auto net = build_network(shape, 0.0, 1.0, snap);
            const auto rec = net.shape();
            ASSERT_EQ(rec.cells, shape);
            std::set<CubeCoord> image;
            for (const auto& [id, c] : rec.cell_of) image.insert(c);
            EXPECT_EQ(image.size(), rec.cell_of.size());
        }
    }
}

TEST(Stream, SimulatorStreamsReplayAndAudit) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto shape = oracle::random_polycube(rng, 2 + trial % 8);
        auto net = build_network(shape);
        // detach a random non-base cube, cascading
        auto ids = broadcast_scan(net.graph());
        const int victim = ids[1 + std::uniform_int_distribution<std::size_t>(0, ids.size() - 2)(rng)];
        const auto cascade = net.detach(victim, 100.0);
        ASSERT_FALSE(cascade.empty());
        EXPECT_EQ(cascade.back().cube_id, victim);
        net.scan(100.0);
        EXPECT_NO_THROW(audit_stream(net.log()));

        TaskRecord r;
        r.events = to_task_events(net.log());
        // every prefix replays
        for (std::size_t k = 0; k <= r.events.size(); ++k) {
            TaskRecord prefix = r;
            prefix.events.resize(k);
            EXPECT_NO_THROW(replay(prefix));
        }
        EXPECT_EQ(replay(r).back(), net.shape().cells);
    }
}

TEST(Stream, JsonLinesRoundTrip) {
    auto net = build_network(Polycube{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}});
    net.detach(2, 10.0);
    net.scan(10.0);
    const auto text = format_net_stream(net.log());
    std::istringstream in(text);
    const auto parsed = parse_net_stream(in);
    EXPECT_EQ(parsed, net.log());
    EXPECT_EQ(format_net_stream(parsed), text);
    EXPECT_NE(text.find("\"face\""), std::string::npos);
}

TEST(Faults, DropDuplicateSwap) {
    CubeNetwork net;
    const int a = net.attach(kBaseCubeId, Face::PosX, 1);
    const int b = net.attach(a, Face::PosX, 2); // references a
    const int c = net.attach(kBaseCubeId, Face::PosY, 3);
    const int d = net.attach(kBaseCubeId, Face::PosZ, 4);
    (void)b;
    (void)c;
    (void)d;
    net.scan(4);
    const auto& stream = net.log();

    // Drop a connect that a later connect depends on
    const auto dropped = inject_fault(stream, Drop{0});
    EXPECT_EQ(error_of([&] { audit_stream(dropped); }), ErrorCode::DanglingLink);
    TaskRecord r;
    r.events = to_task_events(dropped);
    EXPECT_EQ(error_of([&] { replay(r); }), ErrorCode::NotAdjacent);

    // Duplicate a connect
    const auto dup = inject_fault(stream, Duplicate{2});
    EXPECT_EQ(error_of([&] { audit_stream(dup); }), ErrorCode::CellOccupied);
    r.events = to_task_events(dup);
    EXPECT_EQ(error_of([&] { replay(r); }), ErrorCode::CellOccupied);

    // Dropping the final connect is caught by the discovery snapshot
    EXPECT_EQ(error_of([&] { audit_stream(inject_fault(stream, Drop{3})); }), ErrorCode::SnapshotMismatch);

    // Swapping two independent leaf connects stays valid
    const auto swapped = inject_fault(stream, Swap{2, 3});
    EXPECT_EQ(swapped[2].cube_id, d);
    EXPECT_LE(swapped[2].t, swapped[3].t);
    EXPECT_NO_THROW(audit_stream(swapped));
    r.events = to_task_events(swapped);
    EXPECT_NO_THROW(replay(r));
}

TEST(Faults, NetworkStreamFromRecordWithReshapeStart) {
    TaskRecord r;
    r.initial = Polycube{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
    r.events = {{1.0, Action::Disconnect, {0, 1, 1}, 0, std::nullopt},
                {2.0, Action::Connect, {2, 0, 0}, 0, std::nullopt}};
    const auto stream = to_network_stream(r);
    EXPECT_NO_THROW(audit_stream(stream, r.initial));
    TaskRecord back = r;
    back.events = to_task_events(stream);
    EXPECT_EQ(replay(back).back(), replay(r).back());
}
