#!/usr/bin/env python3
"""Emits src/pdf/encoding_tables.inc: the standard PDF single-byte
encodings as code -> Unicode arrays, and the Adobe Glyph List as a sorted
name -> Unicode table. Source data ships with reportlab."""

import sys

from reportlab.pdfbase import _fontdata, _glyphlist

ENCODINGS = ["StandardEncoding", "WinAnsiEncoding", "MacRomanEncoding",
             "PDFDocEncoding", "SymbolEncoding"]


def main():
    names = dict(_glyphlist._glyphname2unicode)
    out = sys.stdout
    out.write("// Generated by scripts/gen_encodings.py. Do not edit.\n")
    for enc in ENCODINGS:
        table = _fontdata.encodings[enc]
        codes = []
        for glyph in table:
            cp = names.get(glyph) if glyph else None
            codes.append(cp if cp is not None else 0)
        ident = "k_" + enc.replace("Encoding", "").lower()
        out.write(f"constexpr std::array<char32_t, 256> {ident} = {{\n")
        for row in range(0, 256, 12):
            out.write("    " + ", ".join(f"0x{c:04X}" for c in codes[row:row + 12]) + ",\n")
        out.write("};\n")
    items = sorted(names.items())
    out.write(f"constexpr std::array<GlyphName, {len(items)}> k_glyph_names = {{{{\n")
    for name, cp in items:
        out.write(f'    {{"{name}", 0x{cp:04X}}},\n')
    out.write("}};\n")


if __name__ == "__main__":
    main()
