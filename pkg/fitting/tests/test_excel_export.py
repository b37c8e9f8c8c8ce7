import pandas as pd
from django.test import SimpleTestCase
from openpyxl import load_workbook

from fitting.danube import DanubeReport
from fitting.excel_export import ReportExporter


def make_report(source='stand-in (seed 1)'):
    rows = [
        {'quantity': 'gumbel_theta', 'value': 2.14, 'published': 2.1383},
        {'quantity': 'lr_statistic', 'value': 12.3, 'published': None},
    ]
    fits = {
        'gumbel': {'params': {'theta': 2.14}, 'loglik': 278.1, 'iterations': 25, 'converged': True},
        'wos': {'params': {'alpha1': 2.8, 'alpha2': 2.0, 'theta': 21.0}, 'loglik': 284.3,
                'iterations': 310, 'converged': False},
    }
    qq = pd.DataFrame({'theoretical': [0.1, 1.0, 3.0], 'empirical': [0.2, 0.9, 3.4]})
    return DanubeReport(source, 659, 1, 1000, rows, fits, qq)


class ReportExporterTestCase(SimpleTestCase):
    def test_sheets(self):
        wb = load_workbook(ReportExporter().export_report(make_report()))
        self.assertEqual(wb.sheetnames, ['Cover', 'Summary', 'Fits', 'Rosenblatt QQ'])

    def test_summary_rows(self):
        ws = load_workbook(ReportExporter().export_report(make_report()))['Summary']
        self.assertEqual(ws['A1'].value, 'Quantity')
        self.assertEqual(ws['A2'].value, 'gumbel_theta')
        self.assertAlmostEqual(ws['C2'].value, 2.1383)
        self.assertEqual(ws['D2'].value, '=B2-C2')
        self.assertIsNone(ws['C3'].value)

    def test_fits_one_row_per_parameter(self):
        ws = load_workbook(ReportExporter().export_report(make_report()))['Fits']
        self.assertEqual(ws.max_row, 5)
        self.assertEqual(ws['F5'].value, 'no')

    def test_standin_banner(self):
        cover = load_workbook(ReportExporter().export_report(make_report()))['Cover']
        self.assertIn('stand-in', cover['A8'].value)
        cover = load_workbook(ReportExporter().export_report(make_report('data/danube.csv')))['Cover']
        self.assertIsNone(cover['A8'].value)
        self.assertEqual(cover['B4'].value, 659)
