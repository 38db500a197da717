#!/usr/bin/env python3
"""Emits src/pdf/standard_metrics.inc: WinAnsi glyph widths (1/1000 em) for
the standard Type 1 fonts, taken from the Adobe AFM data shipped with
reportlab."""

import sys

from reportlab.pdfbase import pdfmetrics

FONTS = [
    "Helvetica", "Helvetica-Bold", "Helvetica-Oblique", "Helvetica-BoldOblique",
    "Times-Roman", "Times-Bold", "Times-Italic", "Times-BoldItalic",
    "Courier", "Courier-Bold", "Courier-Oblique", "Courier-BoldOblique",
]


def main():
    out = sys.stdout
    out.write("// Generated by scripts/gen_standard_metrics.py. Do not edit.\n")
    for name in FONTS:
        widths = pdfmetrics.getFont(name).widths
        assert len(widths) == 256
        ident = name.replace("-", "_").lower()
        out.write(f"constexpr std::array<std::uint16_t, 256> k_{ident} = {{\n")
        for row in range(0, 256, 16):
            out.write("    " + ", ".join(str(int(w)) for w in widths[row:row + 16]) + ",\n")
        out.write("};\n")
    out.write("constexpr std::array<StandardFont, %d> k_standard_fonts = {{\n" % len(FONTS))
    for name in FONTS:
        ident = name.replace("-", "_").lower()
        out.write(f'    {{"{name}", &k_{ident}}},\n')
    out.write("}};\n")


if __name__ == "__main__":
    main()
