"""Verification reports: a ReportLab PDF, or a plain-text file when PDF rendering is not possible."""
import logging
import os
import traceback

from django.utils import timezone

from . import __version__, conf

logger = logging.getLogger(__name__)


def _write_text(path, suite, seed, checks, failure=None):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"gausscap verification report - suite {suite}\n")
        f.write(f"Toolkit version: {__version__}\n")
        f.write(f"Seed: {seed}\n")
        f.write(f"Report Generated: {timezone.now().strftime('%Y-%m-%d %H:%M:%S')}\n\n")
        for item in checks:
            status = 'PASS' if item['pass'] else 'FAIL'
            f.write(f"{status}  {item['check_name']:<40} {item['residual']:.3e} <= {item['threshold']:.1e}\n")
        if failure:
            f.write('\n--- DEBUG TRACEBACK ---\n')
            f.write(failure)
    return path


def write_report(path, suite, seed, checks):
    """Render the check table to ``path`` and return the file actually written.

    A bare file name is placed in REPORT_DIR.
    """
    if not os.path.dirname(path):
        path = os.path.join(conf.get('REPORT_DIR'), path)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    txt_path = os.path.splitext(path)[0] + '.txt'
    # import lazily so the toolkit runs without ReportLab installed
    try:
        from reportlab.lib import colors
        from reportlab.lib.pagesizes import A4
        from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
        from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle
    except ImportError:
        logger.warning('ReportLab not available; writing a plain text report to %s', txt_path)
        return _write_text(txt_path, suite, seed, checks)

    try:
        doc = SimpleDocTemplate(path, pagesize=A4, leftMargin=36, rightMargin=36, topMargin=36, bottomMargin=36)
        styles = getSampleStyleSheet()
        title = ParagraphStyle('ReportTitle', parent=styles['Title'], fontSize=18,
                               textColor=colors.HexColor('#1F4E79'))
        normal = styles['Normal']
        passed = sum(1 for item in checks if item['pass'])

        story = [
            Paragraph(f'Verification report - {suite}', title),
            Paragraph(f'Toolkit {__version__}, seed {seed}, {passed}/{len(checks)} checks passed', normal),
            Spacer(1, 12),
        ]
        rows = [['Suite', 'Check', 'Residual', 'Threshold', 'Result']]
        for item in checks:
            rows.append([item.get('suite', suite), item['check_name'], f"{item['residual']:.3e}",
                         f"{item['threshold']:.1e}", 'pass' if item['pass'] else 'FAIL'])
        table = Table(rows, colWidths=[80, 200, 80, 70, 50])
        style = [
            ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#eeeeee')),
            ('GRID', (0, 0), (-1, -1), 0.25, colors.grey),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
        ]
        for row, item in enumerate(checks, start=1):
            if not item['pass']:
                style.append(('TEXTCOLOR', (4, row), (4, row), colors.HexColor('#B91C1C')))
        table.setStyle(TableStyle(style))
        story.append(table)
        story.append(Spacer(1, 12))
        story.append(Paragraph(f'Report Generated: {timezone.now().strftime("%Y-%m-%d %H:%M:%S")}', normal))
        doc.build(story)
        return path
    except Exception:
        logger.warning('PDF generation failed; fallback text report saved to %s', txt_path)
        return _write_text(txt_path, suite, seed, checks, failure=traceback.format_exc())
