"""privacy-lens: privacy-relevant methods and personal-data flows in Java and JavaScript code"""
