#include <gtest/gtest.h>

#include "hivegen/core/verilog.hpp"

using namespace hivegen;
using namespace hivegen::verilog;

TEST(Verilog, AnsiHeaderWithParameters) {
  auto r = parse(R"(
module pe #(parameter W = 8, parameter ACC = 2*W) (
  input clk, input rst,
  input [W-1:0] a, b,
  output reg [ACC-1:0] acc
);
  always @(posedge clk) begin
    if (rst) acc <= 0;
    else acc <= acc + a * b;
  end
endmodule
)");
  ASSERT_TRUE(r.ok()) << r.error_text();
  ASSERT_EQ(r.modules.size(), 1u);
  const auto& m = r.modules[0];
  EXPECT_EQ(m.name, "pe");
  EXPECT_EQ(m.parameters.at("ACC"), 16);
  ASSERT_EQ(m.ports.size(), 5u);
  EXPECT_EQ(m.ports[2].width, 8);
  EXPECT_EQ(m.ports[3].name, "b");
  EXPECT_EQ(m.ports[3].width, 8);
  EXPECT_EQ(m.ports[4].direction, Direction::Output);
  EXPECT_TRUE(m.ports[4].is_reg);
  EXPECT_EQ(m.ports[4].width, 16);
  EXPECT_TRUE(m.sequential);
  EXPECT_EQ(m.register_bits, 16);
  EXPECT_EQ(m.ops.add, 1);
  EXPECT_EQ(m.ops.mul, 1);
  EXPECT_EQ(m.ops.mux, 1);
}

TEST(Verilog, NonAnsiPortsAndInstances) {
  auto r = parse(R"(
module mux_4(in, sel, out);
  input [3:0] in;
  input [1:0] sel;
  output out;
  wire lo, hi;
  mux_2 u0 (.in(in[1:0]), .sel(sel[0]), .out(lo));
  mux_2 u1 (.in(in[3:2]), .sel(sel[0]), .out(hi));
  mux_2 u2 ({hi, lo}, sel[1], out);
endmodule
module mux_2(input [1:0] in, input sel, output out);
  assign out = sel ? in[1] : in[0];
endmodule
)");
  ASSERT_TRUE(r.ok()) << r.error_text();
  ASSERT_EQ(r.modules.size(), 2u);
  const auto* m4 = r.find("mux_4");
  ASSERT_NE(m4, nullptr);
  EXPECT_EQ(m4->find_port("in")->width, 4);
  EXPECT_EQ(m4->find_port("sel")->width, 2);
  EXPECT_EQ(m4->find_port("out")->direction, Direction::Output);
  ASSERT_EQ(m4->instances.size(), 3u);
  EXPECT_EQ(m4->instances[0].connections[0], (Connection{"in", "in[1:0]"}));
  EXPECT_EQ(m4->instances[2].connections[0], (Connection{"", "{hi,lo}"}));
  const auto* m2 = r.find("mux_2");
  EXPECT_EQ(m2->ops.mux, 1);
  EXPECT_FALSE(m2->sequential);
  auto spec = m4->to_spec();
  EXPECT_EQ(spec.instances.size(), 3u);
  EXPECT_EQ(spec.instances[0].connections.at("out"), "lo");
}

TEST(Verilog, GenerateAndCase) {
  auto r = parse(R"(
module dec #(parameter N = 4) (input [1:0] s, output reg [N-1:0] y);
  genvar i;
  generate
    for (i = 0; i < 2; i = i + 1) begin : g
      buf_cell b (.a(s[i]), .y());
    end
  endgenerate
  always @(*) begin
    case (s)
      2'd0: y = 4'b0001;
      2'd1: y = 4'b0010;
      default: y = 4'b0000;
    endcase
  end
endmodule
)");
  ASSERT_TRUE(r.ok()) << r.error_text();
  const auto& m = r.modules[0];
  EXPECT_EQ(m.instances.size(), 1u);
  EXPECT_EQ(m.ops.mux, 3);
  EXPECT_FALSE(m.sequential);
}

TEST(Verilog, ReportsUnbalancedConstructs) {
  auto r = parse("module m(input a, output y);\n  always @(*) begin\n    y = a;\nendmodule\n");
  EXPECT_FALSE(r.ok());
  EXPECT_NE(r.error_text().find("missing 'end'"), std::string::npos) << r.error_text();

  r = parse("module m(input a, output y);\n  assign y = (a;\nendmodule\n");
  EXPECT_FALSE(r.ok());

  r = parse("module m(input a);\n");
  EXPECT_FALSE(r.ok());
  EXPECT_NE(r.error_text().find("endmodule"), std::string::npos);

  r = parse("always @(*) x = 1;");
  EXPECT_FALSE(r.ok());
}

TEST(Verilog, EmptySourceHasNoModules) {
  auto r = parse("");
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.modules.empty());
}

TEST(Verilog, UndeclaredNonAnsiPortIsAnError) {
  auto r = parse("module m(a, y);\n input a;\n assign y = a;\nendmodule\n");
  EXPECT_FALSE(r.ok());
  EXPECT_NE(r.error_text().find("port y"), std::string::npos) << r.error_text();
}

TEST(Verilog, RenderHeader) {
  ModuleSpec s;
  s.name = "mux_4";
  s.ports = {{"in", Direction::Input, 4}, {"sel", Direction::Input, 2}, {"out", Direction::Output, 1}};
  EXPECT_EQ(render_header(s), "module mux_4 (input [3:0] in, input [1:0] sel, output out);");
  auto r = parse(render_header(s) + "\nendmodule\n");
  ASSERT_TRUE(r.ok()) << r.error_text();
  EXPECT_EQ(r.modules[0].to_spec().ports, s.ports);
}

TEST(Verilog, ExtractCode) {
  EXPECT_EQ(extract_code("Here:\n```verilog\nmodule a; endmodule\n```\nbye"), "module a; endmodule\n");
  EXPECT_EQ(extract_code("Sure. module a; endmodule trailing"), "module a; endmodule\n");
  EXPECT_EQ(extract_code("  nothing  "), "nothing");
}

TEST(Verilog, ReferencedNets) {
  EXPECT_EQ(referenced_nets("{hi, lo[3:0]}"), (std::vector<std::string>{"hi", "lo"}));
  EXPECT_EQ(referenced_nets("a[W-1:0]"), (std::vector<std::string>{"a"}));
}
