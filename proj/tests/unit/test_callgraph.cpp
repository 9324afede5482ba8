#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "coret/callgraph.hpp"
#include "coret/chunker.hpp"
#include "support/temp_dir.hpp"

using namespace coret;
using coret::testing::TempDir;

namespace {

std::set<std::pair<std::string, std::string>> edge_set(const CallGraph& g) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& e : g.edges()) out.emplace(e.caller, e.callee);
    return out;
}

ChunkSet repo_of(std::initializer_list<std::pair<const char*, const char*>> files) {
    TempDir dir;
    for (const auto& [path, src] : files) dir.write(path, src);
    return chunk_repository(dir.path(), {}, "r");
}

}  // namespace

TEST_CASE("intra-file call gives an edge", "[callgraph]") {
    auto set = repo_of({{"m.py", "def f():\n    g()\n\ndef g():\n    pass\n"}});
    auto g = build_call_graph(set);
    CHECK(edge_set(g) == std::set<std::pair<std::string, std::string>>{{"m.py::f", "m.py::g"}});
    CHECK(g.diagnostics.call_sites == 1);
    CHECK(g.diagnostics.unresolved_sites == 0);
}

TEST_CASE("standard library calls produce no edges", "[callgraph]") {
    auto set = repo_of({{"m.py", "import os\n\ndef f():\n    return os.path.join('a', 'b')\n"}});
    auto g = build_call_graph(set);
    CHECK(g.edge_count() == 0);
    CHECK(g.diagnostics.unresolved_sites == 1);
}

TEST_CASE("imported helper resolves across files", "[callgraph]") {
    auto set = repo_of({{"a.py", "from b import helper\n\ndef caller():\n    return helper(1)\n"},
                        {"b.py", "def helper(x):\n    return x\n"}});
    auto g = build_call_graph(set);
    CHECK(edge_set(g) == std::set<std::pair<std::string, std::string>>{{"a.py::caller", "b.py::helper"}});
}

TEST_CASE("module imports, aliases and source roots", "[callgraph]") {
    auto set = repo_of({{"src/pkg/a.py",
                         "import pkg.b\nimport pkg.c as cc\n\n"
                         "def one():\n    pkg.b.work()\n\ndef two():\n    cc.other()\n"},
                        {"src/pkg/b.py", "def work():\n    pass\n"},
                        {"src/pkg/c.py", "def other():\n    pass\n"}});
    auto g = build_call_graph(set);
    CHECK(g.has_edge("src/pkg/a.py::one", "src/pkg/b.py::work"));
    CHECK(g.has_edge("src/pkg/a.py::two", "src/pkg/c.py::other"));
}

TEST_CASE("method calls need syntactic evidence of the receiver class", "[callgraph]") {
    auto set = repo_of({{"m.py",
                         "class A:\n"
                         "    def m(self):\n"
                         "        return self.n()\n"
                         "    def n(self):\n"
                         "        return 1\n"
                         "\n"
                         "def typed():\n"
                         "    a = A()\n"
                         "    return a.m()\n"
                         "\n"
                         "def untyped(obj):\n"
                         "    return obj.m()\n"
                         "\n"
                         "def annotated(obj: A):\n"
                         "    return obj.n()\n"}});
    auto g = build_call_graph(set);
    CHECK(g.has_edge("m.py::A.m", "m.py::A.n"));
    CHECK(g.has_edge("m.py::typed", "m.py::A"));
    CHECK(g.has_edge("m.py::typed", "m.py::A.m"));
    CHECK(g.out_degree("m.py::untyped") == 0);
    CHECK(g.has_edge("m.py::annotated", "m.py::A.n"));
}

TEST_CASE("recursion and nested definitions do not create edges", "[callgraph]") {
    auto set = repo_of({{"m.py",
                         "def f(n):\n"
                         "    def g():\n"
                         "        return 0\n"
                         "    return f(n - 1) + g()\n"
                         "\n"
                         "def g():\n"
                         "    return 1\n"}});
    auto g = build_call_graph(set);
    CHECK(g.edge_count() == 0);
}

TEST_CASE("ambiguous targets keep every candidate", "[callgraph]") {
    auto set = repo_of({{"m.py", "def f():\n    return g()\n\ndef g():\n    pass\n\ndef g():\n    pass\n"}});
    auto g = build_call_graph(set);
    CHECK(edge_set(g) == std::set<std::pair<std::string, std::string>>{{"m.py::f", "m.py::g"},
                                                                       {"m.py::f", "m.py::g#2"}});
}

TEST_CASE("neighbors in each direction", "[callgraph][neighbors]") {
    CallGraph g({"f", "g", "h"});
    g.add_edge({"f", "g", 1, 0});
    CHECK(neighbors(g, "f", Direction::Downstream) == std::vector<std::string>{"g"});
    CHECK(neighbors(g, "g", Direction::Downstream).empty());
    g.add_edge({"h", "g", 1, 0});
    CHECK(neighbors(g, "g", Direction::Upstream) == std::vector<std::string>{"f", "h"});
    CHECK_THROWS_AS(neighbors(g, "zzz"), Error);

    CallGraph order({"a", "b", "c", "d"});
    order.add_edge({"a", "d", 2, 4});
    order.add_edge({"a", "c", 2, 4});
    order.add_edge({"a", "b", 3, 0});
    CHECK(neighbors(order, "a") == std::vector<std::string>{"c", "d", "b"});
    CHECK_FALSE(order.add_edge({"a", "a", 1, 0}));
    CHECK_FALSE(order.add_edge({"a", "b", 9, 0}));
    CHECK_FALSE(order.add_edge({"a", "x", 1, 0}));
}

TEST_CASE("assemble_context layouts", "[callgraph][context]") {
    auto set = repo_of({{"m.py",
                         "def f():\n    g()\n    h()\n    k()\n\n"
                         "def g():\n    return 1\n\n"
                         "def h():\n    return 2\n\n"
                         "def k():\n    return 3\n"}});
    auto graph = build_call_graph(set);
    const Chunk& f = *set.find("m.py::f");
    const Chunk& g = *set.find("m.py::g");

    auto full = assemble_context(f, graph, set);
    CHECK(full.included_neighbor_ids == std::vector<std::string>{"m.py::g", "m.py::h", "m.py::k"});
    CHECK(full.context_text == f.rendered_text + "[DOWN]def g():\n    return 1[DOWN]def h():\n    return 2"
                                                 "[DOWN]def k():\n    return 3");
    REQUIRE(full.segment_spans.size() == 4);
    CHECK(full.segment_spans[0] == SegmentSpan{0, f.rendered_text.size(), SegmentKind::Base});
    CHECK(full.segment_spans[1].begin == f.rendered_text.size() + 6);

    auto alone = assemble_context(g, graph, set);
    CHECK(alone.context_text == g.rendered_text);
    CHECK(alone.segment_spans.size() == 1);

    std::size_t one = f.rendered_text.size() + 6 + std::string("def g():\n    return 1").size();
    auto tight = assemble_context(f, graph, set, one);
    CHECK(tight.included_neighbor_ids.size() == 1);
    CHECK(tight.context_text.size() == one);
    auto tighter = assemble_context(f, graph, set, one + 5);
    CHECK(tighter.included_neighbor_ids.size() == 1);

    CHECK_THROWS_WITH(assemble_context(f, graph, set, 3), "budget too small");

    auto up = assemble_context(g, graph, set, 4096, Direction::Upstream);
    CHECK(up.included_neighbor_ids == std::vector<std::string>{"m.py::f"});
}

TEST_CASE("stripping neighbor suffixes recovers the base text", "[callgraph][context][property]") {
    TempDir dir;
    dir.write("a.py", "from b import x, y\n\ndef p():\n    return x() + y()\n\ndef q():\n    p()\n");
    dir.write("b.py", "def x():\n    return 1\n\ndef y():\n    return x()\n");
    auto set = chunk_repository(dir.path());
    auto graph = build_call_graph(set);
    for (const Chunk& c : set.chunks) {
        auto ctx = assemble_context(c, graph, set);
        CHECK(ctx.context_text.substr(0, ctx.context_text.find(kDownToken)) == c.rendered_text);
        auto down = neighbors(graph, c.chunk_id);
        for (const auto& id : ctx.included_neighbor_ids)
            CHECK(std::find(down.begin(), down.end(), id) != down.end());
        // Spans partition the text except for separators.
        std::size_t covered = 0;
        for (const auto& s : ctx.segment_spans) covered += s.end - s.begin;
        CHECK(covered + kDownToken.size() * ctx.included_neighbor_ids.size() == ctx.context_text.size());
    }
}

TEST_CASE("disjoint repositories never link", "[callgraph][property]") {
    TempDir dir;
    dir.write("one/m.py", "def f():\n    return g()\n\ndef g():\n    pass\n");
    dir.write("two/m.py", "def f():\n    return g()\n\ndef g():\n    pass\n");
    auto a = chunk_repository(dir.path() / "one", {}, "one");
    auto b = chunk_repository(dir.path() / "two", {}, "two");
    ChunkSet both;
    for (auto c : a.chunks) {
        c.chunk_id = "one/" + c.chunk_id;
        c.file_path = "one/" + c.file_path;
        both.chunks.push_back(c);
    }
    for (auto c : b.chunks) {
        c.chunk_id = "two/" + c.chunk_id;
        c.file_path = "two/" + c.file_path;
        both.chunks.push_back(c);
    }
    auto g = build_call_graph(both);
    for (const auto& e : g.edges()) CHECK(e.caller.substr(0, 4) == e.callee.substr(0, 4));
    CHECK(g.edge_count() == 2);
}

TEST_CASE("graph export round trip preserves neighbor order", "[callgraph][io]") {
    auto set = repo_of({{"m.py", "def f():\n    k()\n    g()\n\ndef g():\n    pass\n\ndef k():\n    pass\n"}});
    auto g = build_call_graph(set);
    std::stringstream buf;
    write_graph(g, buf);
    CHECK(buf.str() == "{\"callee\":\"m.py::k\",\"caller\":\"m.py::f\"}\n{\"callee\":\"m.py::g\",\"caller\":\"m.py::f\"}\n");
    auto back = read_graph(buf, set);
    CHECK(neighbors(back, "m.py::f") == neighbors(g, "m.py::f"));

    std::stringstream bad("{\"caller\":\"m.py::f\",\"callee\":\"nope\"}\n");
    CHECK_THROWS_AS(read_graph(bad, set), DataError);
}

TEST_CASE("fixture repository edge set", "[callgraph][fixture]") {
    auto set = chunk_repository(CORET_FIXTURE_DIR "/callgraph_repo", {}, "fixture");
    REQUIRE(set.chunks.size() == 10);
    auto g = build_call_graph(set);
    std::set<std::pair<std::string, std::string>> expected = {
        {"app/main.py::run", "app/util.py::helper"},
        {"app/main.py::run", "app/models.py::Store"},
        {"app/main.py::run", "app/models.py::Store.save"},
        {"app/util.py::helper", "app/util.py::normalize"},
        {"app/util.py::make_store", "app/models.py::Store.save"},
        {"app/models.py::Store", "app/models.py::Logger"},
        {"app/models.py::Store.__init__", "app/models.py::Logger"},
        {"app/models.py::Store.save", "app/models.py::Store.validate"},
        {"app/models.py::Store.save", "app/models.py::Logger.write"},
    };
    CHECK(edge_set(g) == expected);
    CHECK(g.diagnostics.unresolved_sites == 4);
}
