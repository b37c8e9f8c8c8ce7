"""
Excel Export Module
Writes the Danube reproduction report to a workbook: cover, summary against
published values, fitted parameters and the Rosenblatt Q-Q table.
"""

from io import BytesIO
import logging

from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

logger = logging.getLogger(__name__)


class ReportExporter:
    """
    Exports a DanubeReport; published values are shown in blue next to
    the computed ones
    """

    BLUE = '0000FF'  # Published
    BLACK = '000000'  # Computed
    YELLOW = 'FFFF00'  # Stand-in warning
    HEADER_FILL = 'DDEBF7'

    def __init__(self):
        self.wb = None

    def export_report(self, report):
        self.wb = Workbook()

        # Remove default sheet
        if 'Sheet' in self.wb.sheetnames:
            del self.wb['Sheet']

        self._create_cover_sheet(report)
        self._create_summary_sheet(report)
        self._create_fits_sheet(report)
        if report.qq is not None:
            self._create_qq_sheet(report)

        buffer = BytesIO()
        self.wb.save(buffer)
        buffer.seek(0)
        logger.info(f"Report workbook built with sheets {self.wb.sheetnames}")
        return buffer

    def save(self, report, path):
        with open(path, 'wb') as fh:
            fh.write(self.export_report(report).getvalue())

    def _create_cover_sheet(self, report):
        """Create cover sheet"""
        ws = self.wb.create_sheet('Cover', 0)

        ws['A1'] = 'Danube base-flow dependence'
        ws['A1'].font = Font(size=20, bold=True)

        ws['A3'] = 'Data:'
        ws['B3'] = report.source
        ws['A4'] = 'Observations:'
        ws['B4'] = report.n
        ws['A5'] = 'Seed:'
        ws['B5'] = report.seed
        ws['A6'] = 'Bootstrap replicates:'
        ws['B6'] = report.replicates

        if report.standin:
            ws['A8'] = 'Synthetic stand-in data: published values are for reference only'
            ws['A8'].font = Font(bold=True)
            ws['A8'].fill = PatternFill(start_color=self.YELLOW, end_color=self.YELLOW, fill_type='solid')

        ws.column_dimensions['A'].width = 24
        ws.column_dimensions['B'].width = 40

    def _create_summary_sheet(self, report):
        ws = self.wb.create_sheet('Summary')
        headers = ['Quantity', 'Value', 'Published', 'Difference']
        self._write_header(ws, 1, headers)

        row = 2
        for entry in report.rows:
            ws.cell(row, 1).value = entry['quantity']
            ws.cell(row, 2).value = entry['value']
            ws.cell(row, 2).number_format = '0.0000'
            published = entry['published']
            if published is not None:
                ws.cell(row, 3).value = published
                ws.cell(row, 3).font = Font(color=self.BLUE)
                ws.cell(row, 3).number_format = '0.0000'
                ws.cell(row, 4).value = f'=B{row}-C{row}'
                ws.cell(row, 4).number_format = '0.0000'
            row += 1

        self._format_table(ws, len(headers))

    def _create_fits_sheet(self, report):
        ws = self.wb.create_sheet('Fits')
        headers = ['Family', 'Parameter', 'Estimate', 'Log-likelihood', 'Iterations', 'Converged']
        self._write_header(ws, 1, headers)

        row = 2
        for family, fit in report.fits.items():
            for name, value in fit['params'].items():
                ws.cell(row, 1).value = family
                ws.cell(row, 2).value = name
                ws.cell(row, 3).value = value
                ws.cell(row, 3).number_format = '0.0000'
                ws.cell(row, 4).value = fit['loglik']
                ws.cell(row, 4).number_format = '0.000'
                ws.cell(row, 5).value = fit['iterations']
                ws.cell(row, 6).value = 'yes' if fit['converged'] else 'no'
                row += 1

        self._format_table(ws, len(headers))

    def _create_qq_sheet(self, report):
        ws = self.wb.create_sheet('Rosenblatt QQ')
        self._write_header(ws, 1, list(report.qq.columns))
        for i, record in enumerate(report.qq.itertuples(index=False), start=2):
            for col, value in enumerate(record, start=1):
                ws.cell(i, col).value = float(value)
                ws.cell(i, col).number_format = '0.000000'
        self._format_table(ws, len(report.qq.columns))

    def _write_header(self, ws, row, headers):
        thin = Side(style='thin', color=self.BLACK)
        for col, title in enumerate(headers, start=1):
            cell = ws.cell(row, col)
            cell.value = title
            cell.font = Font(bold=True)
            cell.fill = PatternFill(start_color=self.HEADER_FILL, end_color=self.HEADER_FILL, fill_type='solid')
            cell.alignment = Alignment(horizontal='center')
            cell.border = Border(bottom=thin)

    def _format_table(self, ws, columns):
        ws.column_dimensions['A'].width = 26
        for i in range(2, columns + 1):
            ws.column_dimensions[get_column_letter(i)].width = 16
        ws.freeze_panes = 'A2'
